// expect: E0107 Generics
pub struct Pair<A, B>(pub A, pub B);
pub fn make() -> Pair<i32> {
    Pair(1, 2)
}
