#include "cnopt/partition.hpp"

#include "cnopt/errors.hpp"

#include <algorithm>

namespace cnopt {

Partition Partition::monolithic(const CnForm& form)
{
    Partition P;
    P.p = 1;
    P.x_blocks.assign(1, {});
    P.y_blocks.assign(1, {});
    for (Index i = 0; i < form.n; ++i) P.x_blocks[0].push_back(i);
    for (Index i = 0; i < form.m; ++i) P.y_blocks[0].push_back(i);
    P.constraint_owner.assign(static_cast<std::size_t>(form.r()), 0);
    return P;
}

namespace {

void check_block(const Partition& P, Index j)
{
    if (j < 0 || j >= P.p) throw Error(ErrorCode::BlockIndexOutOfRange, "block " + std::to_string(j) + " out of range");
}

}  // namespace

std::vector<Index> Partition::owned_vars(Index j, Index n) const
{
    check_block(*this, j);
    std::vector<Index> v = x_blocks[static_cast<std::size_t>(j)];
    for (Index k : y_blocks[static_cast<std::size_t>(j)]) v.push_back(n + k);
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<Index> Partition::block_vars(Index j, Index n) const
{
    std::vector<Index> v = owned_vars(j, n);
    for (const auto& l : overlap_links)
        if (l.earlier == j) v.push_back(l.coordinate);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<Index> Partition::constraints_of(Index j) const
{
    check_block(*this, j);
    std::vector<Index> out;
    for (std::size_t i = 0; i < constraint_owner.size(); ++i)
        if (constraint_owner[i] == j) out.push_back(static_cast<Index>(i));
    return out;
}

std::vector<Index> Partition::inequalities_of(const CnForm& form, Index j) const
{
    const auto vars = block_vars(j, form.n);
    std::vector<Index> out;
    for (std::size_t q = 0; q < form.ineq_constraints.size(); ++q) {
        const auto& h = form.ineq_constraints[q];
        bool touches = h.dense();
        if (!touches)
            for (Index c : h.support())
                if (std::binary_search(vars.begin(), vars.end(), c)) {
                    touches = true;
                    break;
                }
        if (touches) out.push_back(static_cast<Index>(q));
    }
    return out;
}

std::vector<OverlapLink> Partition::links_into(Index j) const
{
    check_block(*this, j);
    std::vector<OverlapLink> out;
    for (const auto& l : overlap_links)
        if (l.later == j) out.push_back(l);
    return out;
}

void Partition::validate(const CnForm& form) const
{
    if (p < 1 || static_cast<Index>(x_blocks.size()) != p || static_cast<Index>(y_blocks.size()) != p)
        throw Error(ErrorCode::BadSpec, "partition block lists do not match p");
    if (static_cast<Index>(constraint_owner.size()) != form.r())
        throw Error(ErrorCode::BadSpec, "constraint_owner must have one entry per constraint");

    std::vector<Index> owner(static_cast<std::size_t>(form.dim()), -1);
    for (Index j = 0; j < p; ++j)
        for (Index v : owned_vars(j, form.n)) {
            if (v < 0 || v >= form.dim()) throw Error(ErrorCode::BadSpec, "partition index out of range");
            if (owner[static_cast<std::size_t>(v)] != -1) throw Error(ErrorCode::BadSpec, "blocks overlap");
            owner[static_cast<std::size_t>(v)] = j;
        }
    if (std::find(owner.begin(), owner.end(), -1) != owner.end())
        throw Error(ErrorCode::BadSpec, "blocks do not cover every variable");
    for (const auto& l : overlap_links) {
        if (l.earlier < 0 || l.earlier >= p || l.later < 0 || l.later >= p || l.earlier >= l.later)
            throw Error(ErrorCode::BadSpec, "overlap link blocks must satisfy earlier < later");
        if (l.coordinate < 0 || l.coordinate >= form.dim() || owner[static_cast<std::size_t>(l.coordinate)] != l.later)
            throw Error(ErrorCode::BadSpec, "overlap coordinate must be owned by the later block");
    }

    for (Index i = 0; i < form.r(); ++i) {
        const Index j = constraint_owner[static_cast<std::size_t>(i)];
        check_block(*this, j);
        const auto& c = form.constraints[static_cast<std::size_t>(i)];
        if (c.dense() && p > 1) throw Error(ErrorCode::NotDecomposable, "dense constraint cannot be owned by one block");
        const auto vars = block_vars(j, form.n);
        for (Index v : c.support())
            if (!std::binary_search(vars.begin(), vars.end(), v))
                throw Error(ErrorCode::NotDecomposable,
                            "constraint " + std::to_string(i) + " reads coordinate " + std::to_string(v) +
                                " outside block " + std::to_string(j));
    }
}

}  // namespace cnopt
