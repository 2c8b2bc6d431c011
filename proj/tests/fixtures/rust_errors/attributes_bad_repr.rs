// expect: E0552 Attributes
#[repr(packedish)]
pub struct Header {
    pub len: u32,
}
