use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use droplet_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        droplet_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn law(name: &str) -> *mut DropletLaw {
    let name = CString::new(name).unwrap();
    let mut law = ptr::null_mut();
    assert_eq!(
        unsafe { droplet_law_parse(name.as_ptr(), &mut law) },
        DropletStatus::Ok
    );
    law
}

#[test]
fn disk_solution_matches_closed_form() {
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(droplet_curve_disk(1.0, 128, &mut curve), DropletStatus::Ok);
        assert_eq!(droplet_curve_len(curve), 128);

        let mut area = 0.0;
        assert_eq!(droplet_curve_area(curve, &mut area), DropletStatus::Ok);
        assert!((area - std::f64::consts::PI).abs() < 2e-3);

        let mut sol = ptr::null_mut();
        assert_eq!(droplet_solve(curve, &mut sol), DropletStatus::Ok);
        let (mut mass, mut lambda) = (0.0, 0.0);
        assert_eq!(droplet_solution_mass(sol, &mut mass), DropletStatus::Ok);
        assert_eq!(droplet_solution_lambda(sol, &mut lambda), DropletStatus::Ok);
        assert!((mass - std::f64::consts::PI / 8.0).abs() < 1e-3, "{mass}");
        assert!((lambda * mass - 1.0).abs() < 1e-14);

        let mut len = 0;
        assert_eq!(
            droplet_solution_gradient(sol, ptr::null_mut(), 0, &mut len),
            DropletStatus::Ok
        );
        assert_eq!(len, 128);
        let mut g = vec![0.0; len];
        assert_eq!(
            droplet_solution_gradient(sol, g.as_mut_ptr(), g.len(), &mut len),
            DropletStatus::Ok
        );
        let expected = 4.0 / std::f64::consts::PI;
        assert!(g.iter().all(|v| (v - expected).abs() < 1e-2 * expected), "{g:?}");

        droplet_solution_free(sol);
        droplet_curve_free(curve);
    }
}

#[test]
fn points_round_trip_and_buffer_checks() {
    // Unit square, clockwise, with edge midpoints.
    let xy = [
        0.0, 0.0, 0.0, 0.5, 0.0, 1.0, 0.5, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 0.0, 0.5, 0.0,
    ];
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(
            droplet_curve_from_points(xy.as_ptr(), 8, &mut curve),
            DropletStatus::Ok
        );
        let mut area = 0.0;
        droplet_curve_area(curve, &mut area);
        assert_eq!(area, 1.0, "clockwise input is reoriented");

        let mut len = 0;
        let mut small = [0.0; 8];
        assert_eq!(
            droplet_curve_points(curve, small.as_mut_ptr(), small.len(), &mut len),
            DropletStatus::BufferTooSmall
        );
        assert_eq!(len, 16);
        assert!(last_error().contains("need 16"));

        let mut out = [0.0; 16];
        assert_eq!(
            droplet_curve_points(curve, out.as_mut_ptr(), 16, &mut len),
            DropletStatus::Ok
        );
        assert_eq!(&out[..4], &[0.0, 0.0, 0.5, 0.0], "marker 0 kept, order reversed");

        let mut convex = -1;
        assert_eq!(droplet_curve_is_convex(curve, &mut convex), DropletStatus::Ok);
        assert_eq!(convex, 1);
        droplet_curve_free(curve);
    }
}

#[test]
fn errors_map_to_codes_and_messages() {
    unsafe {
        let mut curve = ptr::null_mut();
        assert_eq!(
            droplet_curve_disk(-1.0, 64, &mut curve),
            DropletStatus::InvalidArgument
        );
        assert!(curve.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            droplet_curve_rounded_triangle(1.0, 0.7, 200, &mut curve),
            DropletStatus::InvalidArgument
        );

        let name = CString::new("quadratic").unwrap();
        let mut l = ptr::null_mut();
        assert_eq!(
            droplet_law_parse(name.as_ptr(), &mut l),
            DropletStatus::InvalidLaw
        );
        assert!(last_error().contains("quadratic"));

        let mut v = 0.0;
        assert_eq!(
            droplet_law_velocity(ptr::null(), 1.0, &mut v),
            DropletStatus::NullPointer
        );
        assert_eq!(last_error(), "law is null");

        // A successful call clears the message.
        let mut disk = ptr::null_mut();
        assert_eq!(droplet_curve_disk(1.0, 64, &mut disk), DropletStatus::Ok);
        assert_eq!(droplet_last_error(ptr::null_mut(), 0), 0);
        droplet_curve_free(disk);

        droplet_curve_free(ptr::null_mut());
        droplet_law_free(ptr::null_mut());
        droplet_solution_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates() {
    unsafe {
        droplet_law_velocity(ptr::null(), 1.0, ptr::null_mut());
        let mut buf = [1 as c_char; 4];
        let full = droplet_last_error(buf.as_mut_ptr(), buf.len());
        assert_eq!(full, "law is null".len());
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "law");
    }
}

#[test]
fn law_velocity() {
    let l = law("p2");
    unsafe {
        let mut v = 0.0;
        assert_eq!(droplet_law_velocity(l, 2.0, &mut v), DropletStatus::Ok);
        assert_eq!(v, 3.0);
        assert_eq!(droplet_law_velocity(l, 0.0, &mut v), DropletStatus::OutOfDomain);
        droplet_law_free(l);
    }
}

#[test]
fn evolve_grows_disk_under_p2() {
    let l = law("p2");
    unsafe {
        let mut curve = ptr::null_mut();
        droplet_curve_disk(1.0, 64, &mut curve);
        let mut out = ptr::null_mut();
        assert_eq!(
            droplet_evolve(curve, l, 1e-3, 5e-3, 0, &mut out),
            DropletStatus::Ok,
            "{}",
            last_error()
        );
        let (mut a0, mut a1) = (0.0, 0.0);
        droplet_curve_area(curve, &mut a0);
        droplet_curve_area(out, &mut a1);
        // 4/pi > 1, so p2 moves the boundary outward.
        assert!(a1 > a0, "{a0} -> {a1}");
        assert_eq!(droplet_curve_len(out), 64);
        droplet_curve_free(out);
        droplet_curve_free(curve);
        droplet_law_free(l);
    }
}

#[test]
fn counterexample_report() {
    let l = law("p2");
    unsafe {
        let mut report = DropletReport::default();
        let status = droplet_counterexample(l, 1.0, 0.05, 400, 5e-4, 2e-3, f64::NAN, f64::NAN, &mut report);
        assert_eq!(status, DropletStatus::Ok, "{}", last_error());
        assert!(report.x0 < report.x1 && report.gap_rate > 0.0);
        assert_eq!(report.verdict, 0, "{report:?}");
        assert!(report.t_star.is_finite());
        assert_eq!(report.agree, 1);

        let status = droplet_counterexample(l, 1.0, 0.05, 400, 5e-4, 2e-3, 0.5, f64::NAN, &mut report);
        assert_eq!(status, DropletStatus::InvalidArgument);
        droplet_law_free(l);
    }
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/droplet.h")).unwrap();
    let source = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "header lacks {name}");
    }
    for ty in [
        "typedef struct DropletCurve DropletCurve;",
        "typedef struct DropletReport {",
        "DROPLET_STATUS_OK = 0",
    ] {
        assert!(header.contains(ty), "header lacks `{ty}`");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(format!("{dir}/include/droplet.h"))
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
