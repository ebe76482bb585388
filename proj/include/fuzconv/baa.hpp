#ifndef FUZCONV_BAA_HPP
#define FUZCONV_BAA_HPP

#include <string>
#include <vector>

#include "fuzconv/tensor.hpp"
#include "fuzconv/util.hpp"

namespace fuzconv {

struct BaaConfig {
    int filter_length = 2;     // K
    int stride = 2;            // s
    bool shared_filter = true; // one learned filter for both flanks

    /// Throws unless (K-1)*s + 1 <= side_length.
    void validate_for_side_length(int side_length) const;
};

/**
 * @brief Bilateral Atrous block.
 *
 * Normalize-and-rectify the fuzzified window stack, dilated-filter the two
 * flanks around each preserved center column, then normalize again. The
 * center column passes from the rectified activations into the reassembled
 * map untouched; the final normalization covers the whole map.
 */
class BaaBlock {
public:
    BaaBlock() = default; // empty shell; build with the rng constructor
    BaaBlock(const BaaConfig& cfg, Rng& rng);

    struct Parts {
        Tensor activated;   // after the first norm + rectifier
        Tensor reassembled; // [filtered-left | preserved center | filtered-right]
        Tensor output;      // after the second norm
    };

    /// x is [B,1,S,W] with W odd; output keeps S rows with a narrower width.
    Parts forward_parts(const Tensor& x);
    Tensor forward(const Tensor& x) { return forward_parts(x).output; }

    void set_training(bool training);
    std::vector<NamedParam> parameters(const std::string& prefix) const;

    /// Output width for a given input width (2*SL+1 -> 2*(SL-(K-1)*s)+1).
    int output_width(int input_width) const;

    BaaConfig config;
    BatchNormState bn1;
    BatchNormState bn2;
    Tensor filter_left;
    Tensor filter_right; // same tensor as filter_left when shared
};

/// One-shot functional form of the block for a shared filter; useful for
/// module-boundary tests against isolated dilated convolutions.
Tensor baa_forward(const Tensor& x, const BaaConfig& cfg, BatchNormState& bn1,
                   BatchNormState& bn2, const Tensor& filter);

} // namespace fuzconv

#endif
