fn main() {
    std::process::exit(topicmap_service::cli::run(std::env::args_os()));
}
