#pragma once

#include "cnopt/cn_form.hpp"

#include <vector>

namespace cnopt {

/// A coordinate of x owned by block `later` that block `earlier` also
/// optimizes; block `later` is pulled toward the earlier value.
struct OverlapLink {
    Index coordinate = 0;
    Index earlier = 0;
    Index later = 0;
};

struct Partition {
    Index p = 1;
    /// Indices into x (0..n-1).
    std::vector<std::vector<Index>> x_blocks;
    /// Indices into y (0..m-1).
    std::vector<std::vector<Index>> y_blocks;
    /// Equality constraint index -> owning block.
    std::vector<Index> constraint_owner;
    std::vector<OverlapLink> overlap_links;

    static Partition monolithic(const CnForm& form);

    /// Owned coordinates of block j in w = (x, y) indexing, sorted.
    std::vector<Index> owned_vars(Index j, Index n) const;
    /// Owned coordinates plus overlap coordinates the block also optimizes.
    std::vector<Index> block_vars(Index j, Index n) const;
    std::vector<Index> constraints_of(Index j) const;
    /// Inequalities whose support touches block j's variables.
    std::vector<Index> inequalities_of(const CnForm& form, Index j) const;
    std::vector<OverlapLink> links_into(Index j) const;

    /// Checks coverage, disjointness and constraint ownership. Throws
    /// NotDecomposable when a constraint reads variables outside its owner
    /// block, BadSpec for malformed blocks.
    void validate(const CnForm& form) const;
};

}  // namespace cnopt
