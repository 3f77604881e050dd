//! Parses a run configuration (a file argument or an inline example),
//! reports validation errors the way the CLI does, and prints the complete
//! configuration with every default filled in.

use hetpanel::io::{load_config, parse_config};

const INLINE: &str = r#"
layers = 3
hidden = 32
variant = "e"
channel = "u3"

[data]
cases = 100

[material]
yield_stress = 3.15e8
"#;

fn main() {
    let parsed = match std::env::args().nth(1) {
        Some(path) => load_config(std::path::Path::new(&path)),
        None => parse_config(INLINE),
    };
    match parsed {
        Ok(cfg) => match cfg.to_toml() {
            Ok(text) => print!("{text}"),
            Err(e) => eprintln!("error: {e}"),
        },
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
    // A misspelt key is rejected with a suggestion.
    if let Err(e) = parse_config("lrate = 0.01\n") {
        eprintln!("example rejection: {e}");
    }
}
