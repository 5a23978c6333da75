#pragma once

namespace mosanet {

/// Keeps freed large blocks in the heap instead of returning them to the OS.
/// Training allocates and frees the same few hundred MB every step, and with
/// glibc's default mmap threshold each step pays for fresh page faults.
/// No-op off glibc.
void configure_allocator();

}  // namespace mosanet
