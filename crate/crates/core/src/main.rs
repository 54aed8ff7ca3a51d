use std::io;

fn main() {
    let code = sector_dirac::cli::execute(std::env::args_os(), &mut io::stdout().lock(), &mut io::stderr().lock());
    std::process::exit(code);
}
