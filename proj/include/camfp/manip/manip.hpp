#pragma once

#include <string>

#include "camfp/imgcore/image.hpp"

namespace camfp::manip {

/// out = in^gamma per channel.
img::Image gamma_correct(const img::Image& img, double gamma);

/// Rotation by `degrees` about the image centre, bilinear, edge-replicated,
/// same canvas. Multiples of 90 degrees are exact pixel permutations; 90 and
/// 270 swap height and width.
img::Image rotate(const img::Image& img, double degrees);

enum class ManipOp { gamma, rotate, jpeg };

std::string to_string(ManipOp op);
ManipOp manip_op_from_string(const std::string& s);

struct ManipSpec {
    ManipOp op = ManipOp::gamma;
    double param = 1.0;

    void validate() const;
    /// "gamma=0.7", "rotate=90", "jpeg=50".
    std::string label() const;
    static ManipSpec parse(const std::string& text);
};

img::Image apply(const img::Image& img, const ManipSpec& spec);

}  // namespace camfp::manip
