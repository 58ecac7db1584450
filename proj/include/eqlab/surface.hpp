#pragma once

#include <cstdint>

#include "eqlab/error.hpp"

namespace eqlab {

enum class Backend : std::uint8_t {
    PuncturedTorus,  // (g,n) = (1,1), trace-triple coordinates
    GenusTwo,        // (g,n) = (2,0), Fenchel-Nielsen coordinates on a fixed pants decomposition
};

// Topological type of the model surface. Only the two concrete instances
// below are admitted; everything downstream is parametrized by
// m = dim ML = 6g-6+2n rather than by g alone.
struct SurfaceSpec {
    unsigned genus = 1;
    unsigned punctures = 1;

    unsigned complexity() const { return 3 * genus - 3 + punctures; }       // xi
    unsigned lamination_dim() const { return 6 * genus - 6 + 2 * punctures; }  // m = 2*xi
    int euler_abs() const { return 2 * static_cast<int>(genus) - 2 + static_cast<int>(punctures); }

    Backend backend() const {
        return genus == 1 ? Backend::PuncturedTorus : Backend::GenusTwo;
    }

    static SurfaceSpec punctured_torus() { return SurfaceSpec{1, 1}; }
    static SurfaceSpec genus_two() { return SurfaceSpec{2, 0}; }

    void validate() const {
        bool pt = genus == 1 && punctures == 1;
        bool g2 = genus == 2 && punctures == 0;
        if (!pt && !g2)
            throw invalid_input("SurfaceSpec: only (g=1,n=1) and (g=2,n=0) are supported");
    }
};

inline bool operator==(const SurfaceSpec& a, const SurfaceSpec& b) {
    return a.genus == b.genus && a.punctures == b.punctures;
}

}  // namespace eqlab
