#pragma once

#include "dynamo/core.hpp"

namespace dynamo::fft {

// Unitary (1/sqrt(N) both ways) in-place transforms backed by FFTW.
// Plans are cached and executed with the new-array interface, so concurrent
// calls on distinct buffers are safe.

/// 2D transform of one nx x ny frame stored x-fastest.
void frame2d(cx *data, Index nx, Index ny, bool forward);

/// 1D transform along t for every pixel of an nx x ny x nt sequence.
void along_t(cx *data, Index nx, Index ny, Index nt, bool forward);

} // namespace dynamo::fft
