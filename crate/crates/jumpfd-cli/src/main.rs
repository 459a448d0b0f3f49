fn main() {
    println!("jumpfd");
}
