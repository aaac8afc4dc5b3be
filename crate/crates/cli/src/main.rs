fn main() {
    if let Err(f) = slod_cli::app::main_with_args(std::env::args_os()) {
        if let Some(e) = f.error {
            eprintln!("error: {e:#}");
        }
        std::process::exit(f.code);
    }
}
