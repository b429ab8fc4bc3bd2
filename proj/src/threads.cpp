#include "ssdpulse/threads.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace ssdpulse {

int resolve_thread_count(int requested) {
    if (requested >= 1) return requested;
    if (const char* env = std::getenv("SSD_PULSE_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
            // Malformed env var: ignore and use the hardware default.
        }
    }
    int hw = omp_get_max_threads();
    return hw >= 1 ? hw : 1;
}

int set_thread_count(int requested) {
    int n = resolve_thread_count(requested);
    omp_set_num_threads(n);
    return n;
}

}  // namespace ssdpulse
