// expect: E0603 Modules
mod inner {
    fn hidden() {}
}

pub fn call() {
    inner::hidden();
}
