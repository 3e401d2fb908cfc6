//! Regenerate the committed vocabulary:
//! cargo run -p vam-world --example print_vocab > crates/world/vocab.txt

fn main() {
    for token in vam_world::compute_vocabulary() {
        println!("{token}");
    }
}
