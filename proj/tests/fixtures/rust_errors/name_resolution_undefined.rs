// expect: E0425 Name Resolution
pub fn ht_get(key: &str) -> Option<i32> {
    let idx = hash_key(key);
    table_lookup(idx)
}
