fn main() {
    std::process::exit(pdfcnn::cli::run(std::env::args_os()));
}
