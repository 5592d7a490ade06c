//! Manufactured fractional porous medium profile mapped to the
//! nonlocal-pressure model, with residuals at two resolutions.

use nlpme::config::parse_config;
use nlpme::experiments::transform_levels;

const CONFIG: &str = r#"
experiment = "transform-check"

[model]
m = 1.5
s = 0.5

[grid]
half_length = 16.0
n = 512

[time]
t_end = 1.0

[initial_data]
kind = "zero"

[transform]
q = 2.0
sigma = 0.5
refine = [512, 1024]
tau_end = 30.0
mass = 1.0
factor = 3.0
"#;

fn main() -> nlpme::Result<()> {
    let cfg = parse_config(CONFIG)?;
    for level in transform_levels(&cfg)? {
        println!(
            "n {:>5}: source residual {:.3e}, mapped residual {:.3e}, ratio {:.3}",
            level.n,
            level.source_norm,
            level.mapped_norm,
            level.mapped_norm / level.source_norm
        );
    }
    Ok(())
}
