// expect: E0597 Lifetime
pub fn f() -> usize {
    let r;
    {
        let s = String::from("x");
        r = &s;
    }
    r.len()
}
