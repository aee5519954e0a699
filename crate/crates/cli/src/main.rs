fn main() {
    let home = glycoannot_cli::ConfigHome::from_env();
    std::process::exit(glycoannot_cli::run(std::env::args_os(), &home));
}
