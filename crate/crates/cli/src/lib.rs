//! Library half of the `whatif` binary, so the commands can be driven from
//! tests without spawning a process.

pub mod bench;
pub mod commands;

/// Process exit status for a failed command: 2 for I/O and usage
/// problems, 1 for everything the engine itself rejected.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.is::<std::io::Error>() || matches!(e.downcast_ref::<whatif_core::ModelError>(), Some(whatif_core::ModelError::Io { .. }))
    });
    if io {
        2
    } else {
        1
    }
}
