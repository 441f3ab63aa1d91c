use clap::Parser;

fn main() {
    let args = muskat::cli::Args::parse();
    let code = muskat::cli::main_with_args(args, &mut std::io::stdout());
    std::process::exit(code);
}
