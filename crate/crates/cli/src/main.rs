use std::io::Write;

use nnlscs_cli::{configure_threads, dispatch, Payload};

fn main() {
    configure_threads();
    let argv: Vec<String> = std::env::args().collect();
    let pretty = argv.iter().any(|a| a == "--pretty");
    let result = dispatch(argv);
    if let Payload::Json(v) = &result.payload {
        if let Some(msg) = v.get("error").and_then(|e| e.as_str()) {
            eprintln!("nnlscs: {msg}");
        }
    }
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(result.render(pretty).as_bytes());
    let _ = out.flush();
    std::process::exit(result.exit_code);
}
