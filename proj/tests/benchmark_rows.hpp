#pragma once

// Published benchmark rows: relative error, the four carbon components (kgCO2; embodied is 0
// where the stage does not exist) and the reported score at alpha = beta = 100.

#include <array>

namespace ecol2::fixtures {

struct BenchmarkRow {
    const char* problem;
    const char* method;
    double r;
    double c_e;
    double c_d;
    double c_o;
    double c_i;
    double score;
};

inline constexpr std::array<BenchmarkRow, 15> kBenchmarkRows{{
    {"advection", "PINNs", 4.78e-4, 0.0, 1.35e-2, 8.86e-4, 2.46e-8, 0.332},
    {"advection", "PINNsFormer", 4.25e-4, 0.0, 3.27e-1, 2.67e-2, 1.44e-6, 0.022},
    {"advection", "SPINN", 4.01e-4, 0.0, 5.26e-2, 1.71e-2, 3.59e-6, 0.103},
    {"reaction", "PINNs", 4.37e-3, 0.0, 2.45e-3, 3.28e-4, 1.81e-6, 0.542},
    {"reaction", "PINNsFormer", 1.45e-2, 0.0, 2.01e-1, 9.21e-3, 1.67e-6, 0.027},
    {"reaction", "SPINN", 7.61e-3, 0.0, 5.92e-2, 4.92e-3, 2.84e-6, 0.088},
    {"wave", "PINNs", 7.42e-3, 0.0, 3.60e-2, 3.72e-2, 2.12e-6, 0.078},
    {"wave", "PINNsFormer", 2.44e-2, 0.0, 2.84e+0, 3.30e-1, 3.28e-6, 0.002},
    {"wave", "SPINN", 8.13e-3, 0.0, 5.26e-2, 3.42e-2, 2.76e-6, 0.067},
    {"kdv", "DON", 3.63e-2, 1.90e-4, 3.74e-3, 9.01e-4, 2.89e-6, 0.346},
    {"kdv", "FNO", 7.16e-3, 3.81e-4, 8.43e-4, 8.88e-5, 3.21e-6, 0.581},
    {"kdv", "CNO", 7.27e-3, 3.81e-4, 7.30e-3, 1.86e-3, 7.56e-6, 0.336},
    {"ks", "DON", 5.89e-2, 3.70e-3, 6.10e-3, 1.77e-3, 2.45e-6, 0.213},
    {"ks", "FNO", 1.14e-2, 3.70e-3, 2.86e-3, 8.38e-4, 3.08e-6, 0.357},
    {"ks", "CNO", 2.14e-2, 3.70e-3, 1.25e-2, 3.86e-3, 3.17e-6, 0.188},
}};

inline constexpr double kScoreTolerance = 0.005;

}  // namespace ecol2::fixtures
