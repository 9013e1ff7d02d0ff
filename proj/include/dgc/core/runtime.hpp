#pragma once

namespace dgc {

/// Keeps large tape buffers in the heap instead of returning them to the OS
/// after every step. No-op outside glibc.
void tune_allocator();

}  // namespace dgc
