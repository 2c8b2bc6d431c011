// expect: E0382 Ownership
pub fn f() -> usize {
    let s = String::from("a");
    let t = s;
    s.len() + t.len()
}
