//! `perf_event_open` backend: one raw-event group per session.
//!
//! The first event is the group leader and the only one opened disabled;
//! siblings follow the leader, so the whole group is enabled, disabled and
//! scheduled onto the PMU as a unit. Counting covers the calling thread and,
//! with `inherit`, every thread it spawns afterwards.

use std::io;
use std::os::fd::{AsRawFd, FromRawFd, OwnedFd};

use super::{BackendKind, CollectorError, CounterBackend, LiveOptions};
use crate::machine::EventSet;

const PERF_TYPE_RAW: u32 = 4;
const PERF_ATTR_SIZE_VER5: u32 = 112;
const PERF_FLAG_FD_CLOEXEC: libc::c_ulong = 8;

const ATTR_DISABLED: u64 = 1 << 0;
const ATTR_INHERIT: u64 = 1 << 1;
const ATTR_EXCLUDE_KERNEL: u64 = 1 << 5;
const ATTR_EXCLUDE_HV: u64 = 1 << 6;

const FORMAT_TOTAL_TIME_ENABLED: u64 = 1 << 0;
const FORMAT_TOTAL_TIME_RUNNING: u64 = 1 << 1;

// _IO('$', n)
const IOC_ENABLE: libc::c_ulong = 0x2400;
const IOC_DISABLE: libc::c_ulong = 0x2401;
const IOC_RESET: libc::c_ulong = 0x2403;
const IOC_FLAG_GROUP: libc::c_ulong = 1;

/// `struct perf_event_attr` up to `PERF_ATTR_SIZE_VER5`.
#[repr(C)]
#[derive(Default)]
struct PerfEventAttr {
    type_: u32,
    size: u32,
    config: u64,
    sample_period: u64,
    sample_type: u64,
    read_format: u64,
    flags: u64,
    wakeup_events: u32,
    bp_type: u32,
    config1: u64,
    config2: u64,
    branch_sample_type: u64,
    sample_regs_user: u64,
    sample_stack_user: u32,
    clockid: i32,
    sample_regs_intr: u64,
    aux_watermark: u32,
    sample_max_stack: u16,
    reserved_2: u16,
}

const _: () = assert!(std::mem::size_of::<PerfEventAttr>() == PERF_ATTR_SIZE_VER5 as usize);

pub(crate) struct LiveBackend {
    // Leader first; dropping closes every descriptor.
    fds: Vec<OwnedFd>,
}

fn classify_open_error(err: io::Error, event: &str, hexcode: u64) -> CollectorError {
    match err.raw_os_error() {
        Some(libc::EACCES) | Some(libc::EPERM) => CollectorError::Permission(format!(
            "opening {event} ({hexcode:#x}) was denied: {err}; lower \
             /proc/sys/kernel/perf_event_paranoid or grant CAP_PERFMON"
        )),
        Some(libc::ENOENT) | Some(libc::EOPNOTSUPP) | Some(libc::ENODEV) | Some(libc::EINVAL)
        | Some(libc::ENOSYS) => CollectorError::Capability(format!(
            "PMU does not support {event} ({hexcode:#x}) as a raw event: {err}"
        )),
        _ => CollectorError::Backend(format!("perf_event_open({event}) failed: {err}")),
    }
}

fn open_one(attr: &PerfEventAttr, group_fd: libc::c_int) -> io::Result<OwnedFd> {
    // SAFETY: attr points to a live, correctly sized perf_event_attr; the
    // remaining arguments are plain integers.
    let fd = unsafe {
        libc::syscall(
            libc::SYS_perf_event_open,
            attr as *const PerfEventAttr,
            0 as libc::pid_t,
            -1 as libc::c_int,
            group_fd,
            PERF_FLAG_FD_CLOEXEC,
        )
    };
    if fd < 0 {
        return Err(io::Error::last_os_error());
    }
    // SAFETY: the kernel just handed us ownership of this descriptor.
    Ok(unsafe { OwnedFd::from_raw_fd(fd as libc::c_int) })
}

impl LiveBackend {
    pub(crate) fn open(events: &EventSet, opts: &LiveOptions) -> Result<Self, CollectorError> {
        if !cfg!(target_arch = "aarch64") && !opts.allow_foreign_arch {
            return Err(CollectorError::Capability(format!(
                "raw hexcodes are Arm PMU common events; host architecture is {}",
                std::env::consts::ARCH
            )));
        }
        let mut fds: Vec<OwnedFd> = Vec::with_capacity(events.len());
        for (i, event) in events.events().iter().enumerate() {
            let mut flags = ATTR_EXCLUDE_HV;
            if opts.exclude_kernel {
                flags |= ATTR_EXCLUDE_KERNEL;
            }
            if opts.inherit {
                flags |= ATTR_INHERIT;
            }
            if i == 0 {
                flags |= ATTR_DISABLED;
            }
            let attr = PerfEventAttr {
                type_: PERF_TYPE_RAW,
                size: PERF_ATTR_SIZE_VER5,
                config: event.hexcode,
                read_format: FORMAT_TOTAL_TIME_ENABLED | FORMAT_TOTAL_TIME_RUNNING,
                flags,
                ..Default::default()
            };
            let group_fd = fds.first().map_or(-1, |l| l.as_raw_fd());
            let fd = open_one(&attr, group_fd)
                .map_err(|e| classify_open_error(e, event.name, event.hexcode))?;
            fds.push(fd);
        }
        let backend = Self { fds };
        backend.group_ioctl(IOC_RESET)?;
        Ok(backend)
    }

    fn group_ioctl(&self, request: libc::c_ulong) -> Result<(), CollectorError> {
        let leader = self.fds[0].as_raw_fd();
        // SAFETY: leader is an open perf event descriptor.
        let rc = unsafe { libc::ioctl(leader, request as _, IOC_FLAG_GROUP) };
        if rc < 0 {
            return Err(CollectorError::Backend(format!(
                "perf ioctl {request:#x} failed: {}",
                io::Error::last_os_error()
            )));
        }
        Ok(())
    }
}

impl CounterBackend for LiveBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Live
    }

    fn enable(&mut self) -> Result<(), CollectorError> {
        self.group_ioctl(IOC_ENABLE)
    }

    fn disable(&mut self) -> Result<(), CollectorError> {
        self.group_ioctl(IOC_DISABLE)
    }

    fn read(&mut self) -> Result<Vec<u64>, CollectorError> {
        let mut out = Vec::with_capacity(self.fds.len());
        for fd in &self.fds {
            let mut buf = [0u64; 3];
            // SAFETY: buf is 24 writable bytes, matching the read_format.
            let n = unsafe {
                libc::read(
                    fd.as_raw_fd(),
                    buf.as_mut_ptr().cast(),
                    std::mem::size_of_val(&buf),
                )
            };
            if n != std::mem::size_of_val(&buf) as isize {
                return Err(CollectorError::Backend(format!(
                    "short read from perf counter: {}",
                    io::Error::last_os_error()
                )));
            }
            let [value, enabled, running] = buf;
            if enabled > 0 && running == 0 {
                return Err(CollectorError::Backend(
                    "event group was never scheduled on the PMU (counters busy?)".into(),
                ));
            }
            out.push(value);
        }
        Ok(out)
    }
}
