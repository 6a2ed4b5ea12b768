//! C ABI over the decomposition toolkit: opaque mesh and split handles,
//! status codes, and a thread-local last-error message.
//!
//! Every function returns an [`HdStatus`]; on failure the message is
//! available from [`hd_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use helmdec::decompose::{self, HelmholtzSplit};
use helmdec::mesh::catalog::resolve_gamma;
use helmdec::mesh::Geometry;
use helmdec::{Error, GeometryId, TetMesh, TraceSet};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Precondition = 3,
    Incompatible = 4,
    Unsupported = 5,
    Internal = 6,
    Panic = 7,
}

/// Which coefficient vector of a split to read.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HdComponent {
    /// Nodal potential, one value per vertex.
    P = 0,
    /// Nodal vector field, three values per vertex.
    W = 1,
    /// Edge remainder, one moment per edge.
    R = 2,
}

/// Opaque mesh handle.
pub struct HdMesh {
    mesh: TetMesh,
}

/// Opaque split handle.
pub struct HdSplit {
    split: HelmholtzSplit,
    route: CString,
    claim: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HdStatus {
    match e {
        Error::Precondition { .. } => HdStatus::Precondition,
        Error::Incompatible(_) => HdStatus::Incompatible,
        Error::Unsupported(_) => HdStatus::Unsupported,
        Error::UnknownGeometry(_)
        | Error::UnknownEntity(_)
        | Error::NotOnBoundary(_)
        | Error::InvalidMeshSize(_)
        | Error::Dimension { .. }
        | Error::Config(_)
        | Error::Parse { .. } => HdStatus::InvalidArgument,
        _ => HdStatus::Internal,
    }
}

/// Run `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (HdStatus, String)>) -> HdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HdStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            HdStatus::Panic
        }
    }
}

fn lift<T>(r: helmdec::Result<T>) -> Result<T, (HdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (HdStatus, String) {
    (HdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (HdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread (empty after success).
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build a catalog mesh, e.g. `geometry = "unit_cube"`, `h = 0.25`.
///
/// # Safety
/// `geometry` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hd_mesh_new(geometry: *const c_char, h: f64, out: *mut *mut HdMesh) -> HdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let id: GeometryId = lift(c_str(geometry, "geometry")?.parse())?;
        let mesh = lift(TetMesh::catalog(id, h))?;
        *out = Box::into_raw(Box::new(HdMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must come from [`hd_mesh_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hd_mesh_free(mesh: *mut HdMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hd_mesh_counts(
    mesh: *const HdMesh,
    vertices: *mut usize,
    edges: *mut usize,
    tets: *mut usize,
) -> HdStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if vertices.is_null() || edges.is_null() || tets.is_null() {
            return Err(null("count output"));
        }
        *vertices = m.n_vertices();
        *edges = m.n_edges();
        *tets = m.n_tets();
        Ok(())
    })
}

/// Split the edge field `v` (`n` moments) keeping zero tangential data on
/// `gamma`: a catalog trace name or a comma-separated entity list.
///
/// # Safety
/// `mesh` must be live, `gamma` NUL-terminated, `v` valid for `n` reads and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hd_decompose(
    mesh: *const HdMesh,
    gamma: *const c_char,
    v: *const f64,
    n: usize,
    out: *mut *mut HdSplit,
) -> HdStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        if v.is_null() {
            return Err(null("v"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = c_str(gamma, "gamma")?;
        let names = match m.geometry {
            Some(g) => resolve_gamma(&Geometry::get(g), text),
            None => text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        };
        let trace = lift(TraceSet::tag(m, &names))?;
        if n != m.n_edges() {
            return Err((HdStatus::InvalidArgument, format!("expected {} edge moments, got {n}", m.n_edges())));
        }
        let v = std::slice::from_raw_parts(v, n);
        let split = lift(decompose::decompose(m, v, &trace))?;
        let route = CString::new(split.route.as_str()).expect("route name");
        let claim = CString::new(split.claim.id()).expect("claim id");
        *out = Box::into_raw(Box::new(HdSplit { split, route, claim }));
        Ok(())
    })
}

/// # Safety
/// `split` must come from [`hd_decompose`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hd_split_free(split: *mut HdSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

fn component(s: &HelmholtzSplit, c: HdComponent) -> &[f64] {
    match c {
        HdComponent::P => &s.p,
        HdComponent::W => &s.w,
        HdComponent::R => &s.r,
    }
}

/// # Safety
/// `split` must be live and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hd_split_len(split: *const HdSplit, which: HdComponent, len: *mut usize) -> HdStatus {
    guard(|| {
        let s = &split.as_ref().ok_or_else(|| null("split"))?.split;
        if len.is_null() {
            return Err(null("len"));
        }
        *len = component(s, which).len();
        Ok(())
    })
}

/// Copy a component into `buf`, which must hold exactly its length.
///
/// # Safety
/// `split` must be live and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hd_split_copy(split: *const HdSplit, which: HdComponent, buf: *mut f64, len: usize) -> HdStatus {
    guard(|| {
        let s = &split.as_ref().ok_or_else(|| null("split"))?.split;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let src = component(s, which);
        if src.len() != len {
            return Err((HdStatus::InvalidArgument, format!("buffer holds {len}, component has {}", src.len())));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(src);
        Ok(())
    })
}

/// Route name, valid while the split lives; null for a null handle.
///
/// # Safety
/// `split` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn hd_split_route(split: *const HdSplit) -> *const c_char {
    split.as_ref().map_or(std::ptr::null(), |s| s.route.as_ptr())
}

/// Claim id such as `semi-nolog`, valid while the split lives.
///
/// # Safety
/// `split` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn hd_split_claim(split: *const HdSplit) -> *const c_char {
    split.as_ref().map_or(std::ptr::null(), |s| s.claim.as_ptr())
}

/// Relative identity residual of the split against `v`.
///
/// # Safety
/// Handles must be live, `v` valid for `n` reads, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hd_split_identity_residual(
    mesh: *const HdMesh,
    split: *const HdSplit,
    v: *const f64,
    n: usize,
    out: *mut f64,
) -> HdStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let s = &split.as_ref().ok_or_else(|| null("split"))?.split;
        if v.is_null() || out.is_null() {
            return Err(null("v or out"));
        }
        if n != m.n_edges() || s.r.len() != n {
            return Err((HdStatus::InvalidArgument, "field length does not match the mesh".into()));
        }
        *out = s.identity_residual(m, std::slice::from_raw_parts(v, n));
        Ok(())
    })
}
