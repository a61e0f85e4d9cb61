#include "camfp/common/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace camfp::fft {

namespace {

// FFTW's planner is not reentrant; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <class Fn>
void run_plan(Fn&& make_plan) {
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = make_plan();
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

Spectrum forward(const Plane& p) {
    if (p.size() == 0) throw ShapeError("fft: empty plane");
    Spectrum s(p.rows * (p.cols / 2 + 1));
    std::vector<double> in(p.data);
    run_plan([&] {
        return fftw_plan_dft_r2c_2d(static_cast<int>(p.rows), static_cast<int>(p.cols), in.data(),
                                    reinterpret_cast<fftw_complex*>(s.data()), FFTW_ESTIMATE);
    });
    return s;
}

Plane inverse(Spectrum s, std::size_t rows, std::size_t cols) {
    if (s.size() != rows * (cols / 2 + 1)) throw ShapeError("fft: spectrum size does not match plane");
    Plane out(rows, cols);
    run_plan([&] {
        return fftw_plan_dft_c2r_2d(static_cast<int>(rows), static_cast<int>(cols),
                                    reinterpret_cast<fftw_complex*>(s.data()), out.data.data(), FFTW_ESTIMATE);
    });
    const double norm = 1.0 / static_cast<double>(rows * cols);
    for (auto& v : out.data) v *= norm;
    return out;
}

}  // namespace camfp::fft
