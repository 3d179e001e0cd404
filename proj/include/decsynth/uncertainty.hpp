#pragma once

// Stage-1 uncertainty quantification: partition a verification-labelled test
// dataset into the 2^n verification-outcome buckets, count the per-bucket
// confusion matrices and derive the conditional prediction probabilities as
// exact integer ratios.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "text.hpp"

namespace decsynth {

struct VerifiedSample {
    int true_label = 1;
    int pred_label = 1;
    uint32_t verdicts = 0; // bit i-1 = outcome of verif_i
};

struct Ratio {
    long long num = 0;
    long long den = 1;
    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }
};

class ConfusionTensor {
public:
    ConfusionTensor() = default;
    ConfusionTensor(int classes, uint32_t verifs)
        : K_(classes), n_(verifs), counts_(size_t(1) << verifs, std::vector<long long>(size_t(classes) * classes, 0)) {}

    int K() const { return K_; }
    uint32_t n() const { return n_; }
    uint32_t buckets() const { return 1u << n_; }

    long long count(int k, int pred, uint32_t v) const {
        return counts_[v][index(k, pred)];
    }
    long long& count(int k, int pred, uint32_t v) { return counts_[v][index(k, pred)]; }

    long long class_total(int k) const {
        long long total = 0;
        for (uint32_t v = 0; v < buckets(); ++v)
            for (int pred = 1; pred <= K_; ++pred) total += count(k, pred, v);
        return total;
    }

    // p_{k k' v} as an exact ratio of counts
    Ratio probability(int k, int pred, uint32_t v) const {
        return Ratio{count(k, pred, v), class_total(k)};
    }

    bool operator==(const ConfusionTensor& o) const {
        return K_ == o.K_ && n_ == o.n_ && counts_ == o.counts_;
    }

private:
    int K_ = 0;
    uint32_t n_ = 0;
    std::vector<std::vector<long long>> counts_;

    size_t index(int k, int pred) const {
        if (k < 1 || k > K_ || pred < 1 || pred > K_)
            fail("ArityMismatch", "class index outside [1.." + std::to_string(K_) + "]");
        return static_cast<size_t>(k - 1) * K_ + (pred - 1);
    }
};

inline ConfusionTensor ingest(std::span<const VerifiedSample> rows, int K, uint32_t n) {
    if (K < 1) fail("ArityMismatch", "K must be at least 1");
    if (n > 20) fail("ArityMismatch", "verdict arity too large");
    ConfusionTensor t(K, n);
    for (const auto& row : rows) {
        if (row.true_label < 1 || row.true_label > K || row.pred_label < 1 || row.pred_label > K)
            fail("ArityMismatch", "label outside [1.." + std::to_string(K) + "]");
        if (row.verdicts >= (1u << n))
            fail("ArityMismatch", "verdict vector wider than declared n");
        ++t.count(row.true_label, row.pred_label, row.verdicts);
    }
    for (int k = 1; k <= K; ++k)
        if (t.class_total(k) == 0)
            fail("EmptyClass", "class " + std::to_string(k) +
                                   " absent from the dataset; p_{kk'v} undefined");
    return t;
}

// n'=0 tensor with all verification buckets summed
inline ConfusionTensor marginalize(const ConfusionTensor& t) {
    ConfusionTensor out(t.K(), 0);
    for (uint32_t v = 0; v < t.buckets(); ++v)
        for (int k = 1; k <= t.K(); ++k)
            for (int pred = 1; pred <= t.K(); ++pred) out.count(k, pred, 0) += t.count(k, pred, v);
    return out;
}

struct AccuracyReport {
    struct Bucket {
        uint32_t v = 0;
        Ratio accuracy;          // sum_k C_v[k,k] / sum_{k,k'} C_v[k,k']
        std::vector<Ratio> per_class; // C_v[k,k] / sum_{k'} C_v[k,k']
    };
    Ratio overall;
    std::vector<Ratio> per_class; // sum_v C_v[k,k] / class_total(k)
    std::vector<Bucket> buckets;
};

inline AccuracyReport accuracy_report(const ConfusionTensor& t) {
    AccuracyReport report;
    long long correct = 0, total = 0;
    report.per_class.resize(t.K());
    for (int k = 1; k <= t.K(); ++k) {
        long long ck = 0;
        for (uint32_t v = 0; v < t.buckets(); ++v) ck += t.count(k, k, v);
        report.per_class[k - 1] = Ratio{ck, t.class_total(k)};
        correct += ck;
        total += t.class_total(k);
    }
    report.overall = Ratio{correct, total};
    for (uint32_t v = 0; v < t.buckets(); ++v) {
        AccuracyReport::Bucket bucket;
        bucket.v = v;
        long long diag = 0, mass = 0;
        bucket.per_class.resize(t.K());
        for (int k = 1; k <= t.K(); ++k) {
            long long row = 0;
            for (int pred = 1; pred <= t.K(); ++pred) row += t.count(k, pred, v);
            bucket.per_class[k - 1] = Ratio{t.count(k, k, v), row};
            diag += t.count(k, k, v);
            mass += row;
        }
        bucket.accuracy = Ratio{diag, mass};
        report.buckets.push_back(std::move(bucket));
    }
    return report;
}

// ---------------------------------------------------------------------------
// CSV input: header `true,pred,v1,...,vn`, 1-based labels, 0/1 verdicts

inline std::vector<VerifiedSample> read_samples_csv(std::istream& is, uint32_t& n_out) {
    std::string line;
    if (!std::getline(is, line)) fail("FormatError", "empty samples CSV");
    auto header = split(trim(line), ',');
    if (header.size() < 2 || trim(header[0]) != "true" || trim(header[1]) != "pred")
        fail("FormatError", "samples CSV must start with header true,pred,v1,...");
    uint32_t n = static_cast<uint32_t>(header.size() - 2);
    for (uint32_t i = 0; i < n; ++i)
        if (trim(header[2 + i]) != "v" + std::to_string(i + 1))
            fail("FormatError", "verdict columns must be named v1..vn");
    std::vector<VerifiedSample> rows;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        auto sv = trim(line);
        if (sv.empty()) continue;
        auto cells = split(sv, ',');
        if (cells.size() != header.size())
            fail("ArityMismatch", "row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                      " cells, expected " + std::to_string(header.size()));
        VerifiedSample s;
        long long v;
        if (!parse_ll(trim(cells[0]), v)) fail("FormatError", "bad true label at row " + std::to_string(lineno));
        s.true_label = static_cast<int>(v);
        if (!parse_ll(trim(cells[1]), v)) fail("FormatError", "bad predicted label at row " + std::to_string(lineno));
        s.pred_label = static_cast<int>(v);
        for (uint32_t i = 0; i < n; ++i) {
            auto cell = trim(cells[2 + i]);
            if (cell == "1") s.verdicts |= 1u << i;
            else if (cell != "0") fail("FormatError", "verdict cells must be 0 or 1 at row " + std::to_string(lineno));
        }
        rows.push_back(s);
    }
    n_out = n;
    return rows;
}

inline void write_samples_csv(std::ostream& os, std::span<const VerifiedSample> rows, uint32_t n) {
    os << "true,pred";
    for (uint32_t i = 1; i <= n; ++i) os << ",v" << i;
    os << '\n';
    for (const auto& s : rows) {
        os << s.true_label << ',' << s.pred_label;
        for (uint32_t i = 0; i < n; ++i) os << ',' << ((s.verdicts >> i) & 1u);
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON form: counts plus exact-ratio probabilities with float renderings

inline std::string verdict_bits_key(uint32_t mask, uint32_t n) {
    if (n == 0) return "-";
    std::string s(n, '0');
    for (uint32_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s[i] = '1';
    return s;
}

inline nlohmann::json tensor_to_json(const ConfusionTensor& t) {
    nlohmann::json j;
    j["classes"] = t.K();
    j["verification_methods"] = t.n();
    nlohmann::json counts = nlohmann::json::object();
    for (uint32_t v = 0; v < t.buckets(); ++v) {
        nlohmann::json matrix = nlohmann::json::array();
        for (int k = 1; k <= t.K(); ++k) {
            nlohmann::json row = nlohmann::json::array();
            for (int pred = 1; pred <= t.K(); ++pred) row.push_back(t.count(k, pred, v));
            matrix.push_back(row);
        }
        counts[verdict_bits_key(v, t.n())] = matrix;
    }
    j["counts"] = counts;
    nlohmann::json totals = nlohmann::json::array();
    for (int k = 1; k <= t.K(); ++k) totals.push_back(t.class_total(k));
    j["per_class_totals"] = totals;
    nlohmann::json probs = nlohmann::json::array();
    for (int k = 1; k <= t.K(); ++k)
        for (int pred = 1; pred <= t.K(); ++pred)
            for (uint32_t v = 0; v < t.buckets(); ++v) {
                Ratio r = t.probability(k, pred, v);
                if (r.num == 0) continue;
                probs.push_back({{"true", k},
                                 {"pred", pred},
                                 {"v", verdict_bits_key(v, t.n())},
                                 {"num", r.num},
                                 {"den", r.den},
                                 {"value", r.value()}});
            }
    j["probabilities"] = probs;
    return j;
}

inline ConfusionTensor tensor_from_json(const nlohmann::json& j) {
    int K = j.at("classes").get<int>();
    uint32_t n = j.at("verification_methods").get<uint32_t>();
    ConfusionTensor t(K, n);
    for (const auto& [key, matrix] : j.at("counts").items()) {
        uint32_t mask = 0;
        if (key != "-")
            for (uint32_t i = 0; i < n && i < key.size(); ++i)
                if (key[i] == '1') mask |= 1u << i;
        for (int k = 1; k <= K; ++k)
            for (int pred = 1; pred <= K; ++pred)
                t.count(k, pred, mask) = matrix.at(k - 1).at(pred - 1).get<long long>();
    }
    return t;
}

} // namespace decsynth
