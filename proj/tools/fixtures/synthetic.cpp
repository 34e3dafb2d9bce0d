#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace topicforge::fixtures {

const std::vector<Pool>& keyword_pools() {
    static const std::vector<Pool> pools = [] {
        std::vector<Pool> p{
            {"family", {"mother", "father", "sister", "brother", "parents", "cousin", "grandmother", "siblings",
                        "uncle", "aunt", "household", "childhood", "wedding", "relatives", "daughter"}},
            {"work", {"office", "manager", "salary", "deadline", "colleagues", "promotion", "meeting", "employer",
                      "overtime", "career", "project", "contract", "interview", "resume", "shift"}},
            {"sleep", {"insomnia", "nightmares", "bedtime", "pillow", "dreams", "napping", "melatonin", "snoring",
                       "mattress", "awake", "blanket", "alarm", "drowsy", "rested", "midnight"}},
            {"food", {"breakfast", "dinner", "appetite", "recipe", "kitchen", "vegetables", "snacks", "cooking",
                      "groceries", "hungry", "dessert", "lunch", "restaurant", "calories", "fruit"}},
            {"school", {"teacher", "homework", "classroom", "exam", "grades", "semester", "lecture", "campus",
                        "tuition", "diploma", "principal", "textbook", "classmates", "essay", "graduation"}},
            {"money", {"budget", "savings", "debt", "mortgage", "rent", "loan", "invoice", "taxes", "bank",
                       "credit", "expenses", "payment", "wallet", "bills", "pension"}},
            {"health", {"doctor", "medication", "symptoms", "hospital", "therapy", "diagnosis", "surgery", "nurse",
                        "prescription", "clinic", "recovery", "fever", "pain", "vaccine", "allergy"}},
            {"travel", {"airport", "luggage", "passport", "flight", "hotel", "vacation", "tourist", "beach",
                        "itinerary", "train", "journey", "souvenir", "backpack", "ticket", "border"}},
        };
        std::set<std::string> seen;
        for (const auto& pool : p) {
            for (const auto& w : pool.words) {
                if (!seen.insert(w).second) throw std::logic_error("pool word repeated: " + w);
            }
        }
        return p;
    }();
    return pools;
}

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

} // namespace

SyntheticCorpus make_corpus(const CorpusSpec& spec) {
    const auto& pools = keyword_pools();
    std::mt19937_64 rng(spec.seed);
    std::vector<int> order;
    for (auto p : spec.pools) {
        if (p >= pools.size()) throw std::out_of_range("pool index");
        order.insert(order.end(), spec.docs_per_pool, static_cast<int>(p));
    }
    std::shuffle(order.begin(), order.end(), rng);

    static const std::vector<std::string> client_words{"yes", "right", "maybe", "sure", "well", "really", "okay"};
    SyntheticCorpus out;
    std::size_t in_session = 0, session = 1;
    for (int pool : order) {
        const auto& words = pools[static_cast<std::size_t>(pool)].words;
        const std::size_t len = spec.min_words + uniform_index(rng, spec.max_words - spec.min_words + 1);
        std::string text;
        for (std::size_t i = 0; i < len; ++i) {
            std::string w = words[uniform_index(rng, words.size())];
            if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
            if (i > 0) text += ' ';
            text += w;
        }
        text += '.';
        char sid[16];
        std::snprintf(sid, sizeof sid, "s%02zu", session);
        out.jsonl += nlohmann::json{{"session_id", sid}, {"speaker", "T"}, {"role", "therapist"}, {"text", text}}.dump();
        out.jsonl += '\n';
        out.truth.push_back(pool);
        out.texts.push_back(text);
        if (spec.client_turns) {
            std::string reply = client_words[uniform_index(rng, client_words.size())];
            reply[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(reply[0])));
            out.jsonl += nlohmann::json{{"session_id", sid}, {"speaker", "C"}, {"role", "client"}, {"text", reply + "."}}
                             .dump();
            out.jsonl += '\n';
        }
        if (++in_session == spec.utterances_per_session) {
            in_session = 0;
            ++session;
        }
    }
    return out;
}

Blobs gaussian_blobs(const Matrix& centers, std::size_t per_blob, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Blobs b;
    b.points = Matrix(centers.rows() * per_blob, centers.cols());
    std::size_t r = 0;
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        for (std::size_t i = 0; i < per_blob; ++i, ++r) {
            for (std::size_t j = 0; j < centers.cols(); ++j) b.points(r, j) = centers(c, j) + noise(rng);
            b.truth.push_back(static_cast<int>(c));
        }
    }
    return b;
}

Matrix separated_centers(std::size_t count, std::size_t dim, double min_separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0 * min_separation, 2.0 * min_separation);
    Matrix centers(count, dim);
    for (std::size_t c = 0; c < count;) {
        for (std::size_t j = 0; j < dim; ++j) centers(c, j) = u(rng);
        bool ok = true;
        for (std::size_t o = 0; o < c && ok; ++o) {
            ok = std::sqrt(squared_euclidean(centers.row(c), centers.row(o))) >= min_separation;
        }
        if (ok) ++c;
    }
    return centers;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("labelings differ in length");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [k, v] : joint) index += c2(v);
    for (const auto& [k, v] : ra) sa += c2(v);
    for (const auto& [k, v] : rb) sb += c2(v);
    const double expected = sa * sb / c2(static_cast<double>(a.size()));
    const double max_index = (sa + sb) / 2;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

} // namespace topicforge::fixtures
