fn main() {
    std::process::exit(sfd_cli::main_with_exit());
}
