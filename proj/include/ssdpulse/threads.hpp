#pragma once

namespace ssdpulse {

// Resolves the worker count: explicit request > SSD_PULSE_THREADS env var >
// hardware default. Requests < 1 fall back to the default.
int resolve_thread_count(int requested);

// Applies the resolved count to the OpenMP runtime and returns it.
int set_thread_count(int requested);

}  // namespace ssdpulse
