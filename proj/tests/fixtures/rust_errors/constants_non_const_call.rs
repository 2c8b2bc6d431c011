// expect: E0015 Constants
fn size() -> usize {
    16
}
pub const SIZE: usize = size();
