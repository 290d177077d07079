use std::ffi::CStr;
use std::ptr;

use factlab_ffi::*;

fn field(p: u64) -> *mut FlFieldCtx {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { fl_field_new(p, &mut ctx) }, FlStatus::Ok);
    ctx
}

fn last_error() -> String {
    let msg = fl_last_error();
    assert!(!msg.is_null());
    unsafe { CStr::from_ptr(msg) }.to_string_lossy().into_owned()
}

#[test]
fn field_lifecycle_and_errors() {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { fl_field_new(15, &mut ctx) }, FlStatus::InvalidModulus);
    assert!(ctx.is_null());
    assert!(last_error().contains("15"));
    assert_eq!(unsafe { fl_field_new(7, ptr::null_mut()) }, FlStatus::NullPointer);

    let ctx = field(10007);
    assert_eq!(unsafe { fl_field_modulus(ctx) }, 10007);
    let mut v = 0;
    assert_eq!(unsafe { fl_factorial(ctx, 10006, &mut v) }, FlStatus::Ok);
    assert_eq!(v, 10006);
    assert_eq!(unsafe { fl_factorial(ctx, 10007, &mut v) }, FlStatus::OutOfRange);
    assert_eq!(unsafe { fl_mod_inverse(ctx, 2, &mut v) }, FlStatus::Ok);
    assert_eq!(v, 5004);
    assert_eq!(unsafe { fl_mod_inverse(ctx, 0, &mut v) }, FlStatus::NoInverse);
    assert_eq!(unsafe { fl_wilson_pair(ctx, 3, &mut v) }, FlStatus::Ok);
    assert_eq!(v, 1);
    assert_eq!(unsafe { fl_factorial(ptr::null(), 1, &mut v) }, FlStatus::NullPointer);
    unsafe { fl_field_free(ctx) };
    unsafe { fl_field_free(ptr::null_mut()) };
    assert!(!unsafe { CStr::from_ptr(fl_version()) }.to_bytes().is_empty());
}

#[test]
fn residue_sets() {
    let ctx = field(7);
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { fl_factorial_set(ctx, 0, 6, &mut set) }, FlStatus::Ok);
    assert_eq!(unsafe { fl_residue_set_len(set) }, 4);
    assert!(unsafe { fl_residue_set_contains(set, 6) });
    assert!(!unsafe { fl_residue_set_contains(set, 5) });
    let mut buf = [0u64; 2];
    let mut len = 0;
    assert_eq!(
        unsafe { fl_residue_set_elements(set, buf.as_mut_ptr(), buf.len(), &mut len) },
        FlStatus::BufferTooSmall
    );
    assert_eq!(len, 4);
    let mut buf = [0u64; 8];
    assert_eq!(unsafe { fl_residue_set_elements(set, buf.as_mut_ptr(), buf.len(), &mut len) }, FlStatus::Ok);
    assert_eq!(&buf[..len], &[1, 2, 3, 6]);
    let mut card = 0;
    assert_eq!(unsafe { fl_factorial_residue_count(ctx, &mut card) }, FlStatus::Ok);
    assert_eq!(card, 4);
    unsafe { fl_residue_set_free(set) };
    unsafe { fl_field_free(ctx) };
}

#[test]
fn counts_and_representations() {
    let ctx = field(1009);
    let mut j = 0;
    assert_eq!(unsafe { fl_count_falling(ctx, 3, 5, &mut j) }, FlStatus::Ok);
    assert!(j > 0);
    assert_eq!(unsafe { fl_count_falling(ctx, 2000, 5, &mut j) }, FlStatus::OutOfRange);
    unsafe { fl_field_free(ctx) };

    let ctx = field(7);
    let mut f = [0u64; 3];
    assert_eq!(unsafe { fl_three_factorial(ctx, 2, f.as_mut_ptr()) }, FlStatus::Ok);
    assert_eq!(f, [3, 2, 6]);
    assert_eq!(unsafe { fl_three_factorial(ctx, 0, f.as_mut_ptr()) }, FlStatus::Domain);

    let mut buf = [0u64; 7];
    let mut len = 0;
    assert_eq!(
        unsafe { fl_find_representation(ctx, 3, 3, 3, buf.as_mut_ptr(), buf.len(), &mut len) },
        FlStatus::Ok
    );
    assert_eq!(&buf[..len], &[2, 2, 3]);
    assert_eq!(
        unsafe { fl_find_representation(ctx, 3, 2, 3, buf.as_mut_ptr(), buf.len(), &mut len) },
        FlStatus::NotRepresentable
    );
    assert!(last_error().contains("3"));
    unsafe { fl_field_free(ctx) };
}
