fn main() {
    let spec = microreserve::synthetic::toy_spec(800);
    print!("{}", toml::to_string_pretty(&spec).unwrap());
}
