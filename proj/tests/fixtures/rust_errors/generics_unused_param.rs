// expect: E0392 Generics
pub struct Node<T> {
    value: i32,
}
