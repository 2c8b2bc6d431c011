// expect: E0277 Traits
pub struct Point {
    pub x: i32,
}

pub fn show(p: Point) -> String {
    format!("{}", p)
}
