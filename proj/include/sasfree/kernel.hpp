#pragma once

#include "error.hpp"
#include "free_group.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace sasfree {

// Finitely supported kernel f(w, t) of a mixed moving average: one entry per
// atom w of the (discrete) control measure nu, with f(w, .) tabulated over E_m
// in shortlex order.
struct KernelAtom {
    double mass = 1.0;
    std::vector<double> values;
};

class KernelTable {
public:
    KernelTable(int d, int m) : d_(d), m_(m), indexer_(d, m) {}

    // Builds a table from word -> value maps; m is the largest word length seen.
    static KernelTable from_maps(int d, const std::vector<std::pair<double, std::map<std::string, double>>>& atoms)
    {
        check_rank(d);
        int m = 0;
        std::vector<std::vector<std::pair<Word, double>>> parsed;
        for (const auto& [mass, f] : atoms) {
            auto& row = parsed.emplace_back();
            for (const auto& [key, v] : f) {
                Word w = parse_word(d, key);
                m = std::max(m, static_cast<int>(w.length()));
                row.emplace_back(std::move(w), v);
            }
        }
        KernelTable k(d, m);
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            KernelAtom a;
            a.mass = atoms[i].first;
            a.values.assign(k.indexer_.size(), 0.0);
            for (const auto& [w, v] : parsed[i])
                a.values[k.indexer_.index(w)] = v;
            k.add_atom(std::move(a));
        }
        return k;
    }

    // f(w, t) = 1{t = e} for a single unit-mass atom.
    static KernelTable identity_indicator(int d, double value = 1.0)
    {
        KernelTable k(d, 0);
        k.add_atom(KernelAtom{1.0, {value}});
        return k;
    }

    void add_atom(KernelAtom a)
    {
        if (a.values.size() != indexer_.size())
            throw InvalidArgument("kernel atom must tabulate all of E_m");
        if (!(a.mass > 0.0) || !std::isfinite(a.mass))
            throw InvalidArgument("atom masses must be positive and finite");
        for (double v : a.values)
            if (!std::isfinite(v))
                throw InvalidArgument("kernel values must be finite");
        atoms_.push_back(std::move(a));
    }

    int rank() const { return d_; }
    int radius() const { return m_; }
    const BallIndexer& indexer() const { return indexer_; }
    const std::vector<KernelAtom>& atoms() const { return atoms_; }
    std::size_t ball_size() const { return indexer_.size(); }

    double value(std::size_t atom, const Word& t) const
    {
        if (t.length() > static_cast<std::size_t>(m_))
            return 0.0;
        return atoms_.at(atom).values[indexer_.index(t)];
    }

    KernelTable scaled(double c) const
    {
        KernelTable k = *this;
        for (auto& a : k.atoms_)
            for (auto& v : a.values)
                v *= c;
        return k;
    }

    // f'(w, k) = f(w, k^-1), as a table over the same ball.
    KernelTable reflected() const
    {
        KernelTable k = *this;
        for (std::size_t a = 0; a < atoms_.size(); ++a)
            for (std::uint64_t i = 0; i < indexer_.size(); ++i)
                k.atoms_[a].values[indexer_.index(inverse(indexer_.word(i)))] = atoms_[a].values[i];
        return k;
    }

    double sup_abs(std::size_t atom) const
    {
        double s = 0.0;
        for (double v : atoms_.at(atom).values)
            s = std::max(s, std::abs(v));
        return s;
    }

    bool is_zero() const
    {
        for (std::size_t a = 0; a < atoms_.size(); ++a)
            if (sup_abs(a) > 0.0)
                return false;
        return true;
    }

    // sum_w mass_w sum_t |f(w,t)|^alpha
    double lalpha_norm(double alpha) const
    {
        double s = 0.0;
        for (const auto& a : atoms_) {
            double r = 0.0;
            for (double v : a.values)
                r += std::pow(std::abs(v), alpha);
            s += a.mass * r;
        }
        return s;
    }

private:
    int d_;
    int m_;
    BallIndexer indexer_;
    std::vector<KernelAtom> atoms_;
};

} // namespace sasfree
