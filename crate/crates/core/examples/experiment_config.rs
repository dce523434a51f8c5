//! Builds an experiment from TOML text, runs it and prints the JSON summary.

use tvdopt::experiment::{execute, ExperimentSpec};

const SPEC: &str = r#"
name = "four_agents"
flow = "consensus_zgs"
seed = 11

[network]
builtin = "cycle4"

[problem]
family = "squared_affine"
agents = [
  { a = 1.0, b = [{ linear = 1.0 }] },
  { a = 2.0, b = [{ sin = { amp = 1.0, freq = 1.0 } }] },
  { a = 3.0, b = [{ cos = { amp = 1.0, freq = 1.0 } }] },
  { a = 4.0, b = [{ linear = 0.5 }] },
]

[gain]
variant = "power_sign"
a = 5.0
p = 0.5
alpha = 120.0

[sim]
h = 1e-4
t_end = 3.0
record_every = 20

[init]
kind = "values"
values = [[0.5], [-0.5], [0.2], [-0.1]]
"#;

fn main() -> tvdopt::Result<()> {
    let spec = ExperimentSpec::from_toml(SPEC)?;
    let run = execute(&spec, 0)?;
    println!("{}", serde_json::to_string_pretty(&run.summary).expect("summary serializes"));
    println!("canonical form:\n{}", spec.to_toml()?);
    Ok(())
}
