use std::io;

fn main() {
    let code = fermi_parity::cli::main_with_args(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
