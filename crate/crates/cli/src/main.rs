fn main() {
    std::process::exit(td2ip_cli::run(std::env::args_os()));
}
