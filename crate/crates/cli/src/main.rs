fn main() { println!("misbelief"); }
