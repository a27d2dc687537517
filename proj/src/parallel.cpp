#include "morphnet/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "morphnet/errors.hpp"

namespace morphnet {

int configure_threads_from_env() {
    if (const char* env = std::getenv("MORPHNET_THREADS"); env && *env) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (*end != '\0' || n <= 0) throw InputError("MORPHNET_THREADS must be a positive integer, got '" + std::string(env) + "'");
        omp_set_num_threads(static_cast<int>(n));
    }
    return omp_get_max_threads();
}

}  // namespace morphnet
