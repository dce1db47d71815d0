#include "forge/embedding.hpp"

namespace forge {

std::vector<Embedding> enumerate_embeddings(const FinStructure& a, const FinStructure& b)
{
    std::vector<Embedding> out;
    for_each_embedding(a, b, [&](const Embedding& e) {
        out.push_back(e);
        return true;
    });
    return out;
}

std::size_t count_embeddings(const FinStructure& a, const FinStructure& b)
{
    std::size_t n = 0;
    for_each_embedding(a, b, [&](const Embedding&) {
        ++n;
        return true;
    });
    return n;
}

bool isomorphic(const FinStructure& a, const FinStructure& b)
{
    return a.sizes() == b.sizes() && embeds(a, b);
}

std::vector<Embedding> automorphisms(const FinStructure& s) { return enumerate_embeddings(s, s); }

} // namespace forge
