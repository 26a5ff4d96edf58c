#pragma once

namespace geann::util {

/// Keeps large freed blocks in the heap instead of returning them to the OS.
/// Training allocates and frees many same-sized activation buffers per batch.
/// No-op outside glibc.
void retain_freed_memory();

}  // namespace geann::util
