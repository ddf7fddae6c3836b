//! Serializes and parses IDX arrays, and shows how malformed input is
//! classified.

use evobench::tasks::idx::{parse, serialize, IdxArray, IMAGES_MAGIC};

fn main() -> evobench::Result<()> {
    let a = IdxArray::new(vec![2, 3, 3], (0..18).collect())?;
    let bytes = serialize(&a)?;
    println!("{} bytes, magic {:#010x}", bytes.len(), IMAGES_MAGIC);
    assert_eq!(parse(&bytes)?, a);

    let mut bad_magic = bytes.clone();
    bad_magic[2] = 0x0d;
    println!("wrong magic: {}", parse(&bad_magic).unwrap_err());
    println!("truncated:   {}", parse(&bytes[..bytes.len() - 1]).unwrap_err());
    Ok(())
}
