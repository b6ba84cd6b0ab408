fn main() {
    std::process::exit(ridepool::cli::main());
}
