// expect: E0308 Type
pub fn count() -> u32 {
    let n: i32 = 3;
    n
}
