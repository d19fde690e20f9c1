fn main() {
    std::process::exit(sensor_anomaly::cli::run(std::env::args().collect()));
}
