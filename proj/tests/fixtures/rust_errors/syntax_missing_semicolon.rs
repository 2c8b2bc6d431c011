// expect: - Syntax
pub fn f() -> i32 {
    let x = 1
    x
}
