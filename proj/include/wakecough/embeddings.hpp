#ifndef WAKECOUGH_EMBEDDINGS_HPP
#define WAKECOUGH_EMBEDDINGS_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "wakecough/classifiers.hpp"

namespace wakecough {

enum class EmbeddingKind { IVector, XVector, DVector };

inline int embedding_dim(EmbeddingKind kind) {
    switch (kind) {
        case EmbeddingKind::IVector: return 100;
        case EmbeddingKind::XVector: return 512;
        case EmbeddingKind::DVector: return 256;
    }
    return 0;
}

EmbeddingKind parse_embedding_kind(const std::string& name);

struct EmbeddingSet {
    EmbeddingKind kind;
    Eigen::MatrixXd rows;              // n x dim(kind)
    std::vector<std::string> subjects; // per row
    std::vector<long> segments;        // per row
    std::vector<std::string> warnings; // non-fatal row-count mismatches
};

// CSV schema: header row, then subject_id, segment_index, dim(kind) floats.
EmbeddingSet import_embeddings(const std::string& path, EmbeddingKind kind);

void export_embeddings(const std::string& path, const EmbeddingSet& set);

// Filter to the requested subjects and map labels to 0..N-1 in sorted
// subject order.
LabeledSet to_labeled_set(const EmbeddingSet& set, const std::vector<std::string>& subjects);

} // namespace wakecough

#endif
