#include "ctxseq/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "ctxseq/errors.hpp"

namespace ctxseq {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

bool is_doc_header(const std::string& line) { return line.rfind("#doc", 0) == 0; }

std::string doc_header_id(const std::string& line, std::size_t line_no) {
    auto tokens = split_ws(line);
    if (tokens.size() != 2) {
        throw DataError("line " + std::to_string(line_no) + ": malformed document header '" +
                        line + "' (expected '#doc <id>')");
    }
    return tokens[1];
}

std::string join_ids(const std::vector<std::size_t>& ids) {
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out << ' ';
        out << ids[i];
    }
    return out.str();
}

std::vector<std::size_t> parse_ids(const std::string& field, const std::string& where) {
    std::vector<std::size_t> ids;
    std::istringstream in(field);
    std::string tok;
    while (in >> tok) {
        try {
            ids.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw DataError(where + ": bad token id '" + tok + "'");
        }
    }
    return ids;
}

// Shared pair/single-file reader; `tgt` may be null for source-only input.
std::vector<Document> load_lines(std::istream& src, std::istream* tgt,
                                 const std::string& src_name, const std::string& tgt_name) {
    std::vector<Document> docs;
    Document current;
    Paragraph paragraph;
    bool doc_open = false;
    std::size_t implicit_ids = 0;
    std::size_t line_no = 0;

    auto flush_paragraph = [&]() {
        if (!paragraph.sentences.empty()) {
            current.paragraphs.push_back(std::move(paragraph));
            paragraph = Paragraph{};
        }
    };
    auto flush_document = [&]() {
        flush_paragraph();
        if (doc_open) {
            if (current.paragraphs.empty()) {
                throw DataError("document '" + current.doc_id + "' has no sentences");
            }
            docs.push_back(std::move(current));
            current = Document{};
            doc_open = false;
        }
    };

    std::string src_line, tgt_line;
    while (true) {
        const bool src_ok = static_cast<bool>(std::getline(src, src_line));
        bool tgt_ok = src_ok;
        if (tgt) {
            tgt_ok = static_cast<bool>(std::getline(*tgt, tgt_line));
            if (src_ok != tgt_ok) {
                throw DataError("line " + std::to_string(line_no + 1) + ": " +
                                (src_ok ? tgt_name : src_name) + " ends early (line counts differ)");
            }
        }
        if (!src_ok) break;
        ++line_no;

        const bool src_blank = is_blank(src_line);
        const bool src_header = !src_blank && is_doc_header(src_line);
        if (tgt) {
            const bool tgt_blank = is_blank(tgt_line);
            const bool tgt_header = !tgt_blank && is_doc_header(tgt_line);
            if (src_blank != tgt_blank) {
                throw DataError("line " + std::to_string(line_no) + ": sentence is empty in " +
                                (src_blank ? src_name : tgt_name) + " only");
            }
            if (src_header != tgt_header) {
                throw DataError("line " + std::to_string(line_no) +
                                ": document header present in " +
                                (src_header ? src_name : tgt_name) + " only");
            }
            if (src_header) {
                const std::string a = doc_header_id(src_line, line_no);
                const std::string b = doc_header_id(tgt_line, line_no);
                if (a != b) {
                    throw DataError("line " + std::to_string(line_no) + ": document ids differ ('" +
                                    a + "' vs '" + b + "')");
                }
            }
        }

        if (src_blank) {
            flush_paragraph();
            continue;
        }
        if (src_header) {
            flush_document();
            current.doc_id = doc_header_id(src_line, line_no);
            doc_open = true;
            continue;
        }
        if (!doc_open) {
            current.doc_id = "doc" + std::to_string(implicit_ids++);
            doc_open = true;
        }
        SentencePair pair;
        pair.src = split_ws(src_line);
        if (tgt) pair.tgt = split_ws(tgt_line);
        paragraph.sentences.push_back(std::move(pair));
    }
    flush_document();
    return docs;
}

}  // namespace

Vocabulary::Vocabulary(std::size_t max_size, std::string marker) : max_size_(max_size) {
    if (max_size <= kNumReserved) {
        throw DomainError("vocabulary max_size must exceed the " +
                          std::to_string(kNumReserved) + " reserved tokens");
    }
    id_to_token_ = {kPadToken, kBosToken, kEosToken, kUnkToken, std::move(marker)};
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) token_to_id_[id_to_token_[i]] = i;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kNumReserved) {
        throw DataError("vocabulary needs at least the " + std::to_string(kNumReserved) +
                        " reserved tokens, got " + std::to_string(tokens.size()));
    }
    const char* expected[] = {kPadToken, kBosToken, kEosToken, kUnkToken};
    for (std::size_t i = 0; i < 4; ++i) {
        if (tokens[i] != expected[i]) {
            throw DataError("vocabulary id " + std::to_string(i) + " must be '" + expected[i] +
                            "', got '" + tokens[i] + "'");
        }
    }
    Vocabulary vocab(std::max(tokens.size(), kNumReserved + 1), tokens[kMarkerId]);
    for (std::size_t i = kNumReserved; i < tokens.size(); ++i) vocab.add_token(tokens[i]);
    return vocab;
}

std::size_t Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(std::size_t id) const {
    if (id >= id_to_token_.size()) {
        throw IndexError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                         std::to_string(id_to_token_.size()));
    }
    return id_to_token_[id];
}

bool Vocabulary::contains(const std::string& token) const {
    return token_to_id_.count(token) != 0;
}

std::size_t Vocabulary::add_token(const std::string& token) {
    if (auto it = token_to_id_.find(token); it != token_to_id_.end()) {
        throw DataError("vocabulary already contains '" + token + "'");
    }
    if (id_to_token_.size() >= max_size_) {
        throw DataError("vocabulary size cap " + std::to_string(max_size_) + " reached");
    }
    id_to_token_.push_back(token);
    token_to_id_[token] = id_to_token_.size() - 1;
    return id_to_token_.size() - 1;
}

std::string Vocabulary::content_hash() const {
    std::string joined;
    for (const auto& t : id_to_token_) {
        joined += t;
        joined += '\n';
    }
    return fnv1a_hex(joined);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary file " + path);
    for (const auto& t : id_to_token_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocabulary file " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return from_tokens(tokens);
}

std::size_t Document::sentence_count() const {
    std::size_t n = 0;
    for (const auto& p : paragraphs) n += p.sentences.size();
    return n;
}

std::vector<Document> load_corpus(const std::string& src_path, const std::string& tgt_path) {
    std::ifstream src(src_path, std::ios::binary);
    if (!src) throw DataError("cannot read corpus file " + src_path);
    std::ifstream tgt(tgt_path, std::ios::binary);
    if (!tgt) throw DataError("cannot read corpus file " + tgt_path);
    return load_lines(src, &tgt, src_path, tgt_path);
}

std::vector<Document> load_source_documents(const std::string& src_path) {
    std::ifstream src(src_path, std::ios::binary);
    if (!src) throw DataError("cannot read corpus file " + src_path);
    return load_lines(src, nullptr, src_path, "");
}

void write_corpus(const std::vector<Document>& docs, const std::string& src_path,
                  const std::string& tgt_path) {
    std::ofstream src(src_path, std::ios::binary);
    std::ofstream tgt(tgt_path, std::ios::binary);
    if (!src || !tgt) throw DataError("cannot write corpus files");
    auto join = [](const std::vector<std::string>& tokens) {
        std::string s;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) s += ' ';
            s += tokens[i];
        }
        return s;
    };
    for (const auto& doc : docs) {
        src << "#doc " << doc.doc_id << '\n';
        tgt << "#doc " << doc.doc_id << '\n';
        for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
            if (p) {
                src << '\n';
                tgt << '\n';
            }
            for (const auto& s : doc.paragraphs[p].sentences) {
                src << join(s.src) << '\n';
                tgt << join(s.tgt) << '\n';
            }
        }
    }
}

std::vector<std::string> normalize_numbers(std::vector<std::string> tokens) {
    for (auto& t : tokens) {
        const bool all_digits =
            !t.empty() && std::all_of(t.begin(), t.end(), [](unsigned char c) {
                return c >= '0' && c <= '9';
            });
        if (all_digits) t = "0";
    }
    return tokens;
}

void normalize_numbers(Document& doc) {
    for (auto& p : doc.paragraphs) {
        for (auto& s : p.sentences) {
            s.src = normalize_numbers(std::move(s.src));
            s.tgt = normalize_numbers(std::move(s.tgt));
        }
    }
}

void insert_paragraph_marker(Document& doc, const std::string& marker) {
    for (auto& p : doc.paragraphs) {
        if (p.sentences.empty()) continue;
        auto& first = p.sentences.front().src;
        if (first.empty() || first.front() != marker) {
            first.insert(first.begin(), marker);
        }
    }
}

Vocabulary build_vocab(const std::vector<Document>& docs, Side side, std::size_t max_size,
                       const std::string& marker) {
    Vocabulary vocab(max_size, marker);
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& doc : docs) {
        for (const auto& p : doc.paragraphs) {
            for (const auto& s : p.sentences) {
                for (const auto& raw : normalize_numbers(side == Side::source ? s.src : s.tgt)) {
                    ++total;
                    if (vocab.contains(raw)) continue;  // reserved tokens are exempt
                    ++counts[raw];
                }
            }
        }
    }
    if (total == 0) throw DataError("build_vocab: empty corpus");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t keep = std::min(ranked.size(), max_size - kNumReserved);
    for (std::size_t i = 0; i < keep; ++i) vocab.add_token(ranked[i].first);
    return vocab;
}

std::vector<std::size_t> encode_tokens(const Vocabulary& vocab,
                                       const std::vector<std::string>& tokens, bool add_eos) {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size() + (add_eos ? 1 : 0));
    for (const auto& t : tokens) ids.push_back(vocab.id_of(t));
    if (add_eos) ids.push_back(kEosId);
    return ids;
}

std::vector<std::string> decode_tokens(const Vocabulary& vocab,
                                       const std::vector<std::size_t>& ids) {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (std::size_t id : ids) tokens.push_back(vocab.token_of(id));
    return tokens;
}

EncodedDocument encode_document(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                const Document& doc) {
    EncodedDocument out;
    out.doc_id = doc.doc_id;
    for (std::size_t p = 0; p < doc.paragraphs.size(); ++p) {
        const auto& sentences = doc.paragraphs[p].sentences;
        for (std::size_t s = 0; s < sentences.size(); ++s) {
            EncodedSentence enc;
            enc.src_ids = encode_tokens(src_vocab, sentences[s].src, false);
            enc.tgt_ids = encode_tokens(tgt_vocab, sentences[s].tgt, false);
            enc.paragraph_index = p;
            enc.sentence_index = s;
            out.sentences.push_back(std::move(enc));
        }
    }
    return out;
}

std::vector<std::size_t> frame_source(const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> framed = ids;
    framed.push_back(kEosId);
    return framed;
}

std::vector<std::size_t> frame_target(const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> framed;
    framed.reserve(ids.size() + 2);
    framed.push_back(kBosId);
    framed.insert(framed.end(), ids.begin(), ids.end());
    framed.push_back(kEosId);
    return framed;
}

void write_preprocessed_tsv(const std::string& path, const std::vector<EncodedDocument>& docs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& doc : docs) {
        for (const auto& s : doc.sentences) {
            out << doc.doc_id << '\t' << s.paragraph_index << '\t' << s.sentence_index << '\t'
                << join_ids(s.src_ids) << '\t' << join_ids(s.tgt_ids) << '\n';
        }
    }
}

std::vector<EncodedDocument> read_preprocessed_tsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::vector<EncodedDocument> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 5) {
            throw DataError(where + ": expected 5 tab-separated fields, got " +
                            std::to_string(fields.size()));
        }
        EncodedSentence enc;
        try {
            enc.paragraph_index = std::stoull(fields[1]);
            enc.sentence_index = std::stoull(fields[2]);
        } catch (const std::exception&) {
            throw DataError(where + ": bad paragraph/sentence index");
        }
        enc.src_ids = parse_ids(fields[3], where);
        enc.tgt_ids = parse_ids(fields[4], where);
        if (docs.empty() || docs.back().doc_id != fields[0]) {
            docs.push_back(EncodedDocument{fields[0], {}});
        }
        docs.back().sentences.push_back(std::move(enc));
    }
    return docs;
}

BatchSchedule make_batches(const std::vector<EncodedDocument>& docs, std::size_t batch_size) {
    if (batch_size == 0) throw DomainError("make_batches: batch size must be >= 1");
    BatchSchedule schedule;
    schedule.num_lanes = batch_size;

    // Longest documents first; least-loaded lane wins, lowest index on ties.
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return docs[a].sentences.size() > docs[b].sentences.size();
    });

    std::vector<std::vector<std::size_t>> lane_docs(batch_size);
    std::vector<std::size_t> lane_load(batch_size, 0);
    for (std::size_t doc : order) {
        std::size_t best = 0;
        for (std::size_t l = 1; l < batch_size; ++l) {
            if (lane_load[l] < lane_load[best]) best = l;
        }
        lane_docs[best].push_back(doc);
        lane_load[best] += docs[doc].sentences.size();
    }

    struct Cursor {
        std::size_t next_doc = 0;
        std::size_t next_sentence = 0;
    };
    std::vector<Cursor> cursors(batch_size);
    bool any = true;
    while (any) {
        any = false;
        BatchStep step;
        for (std::size_t lane = 0; lane < batch_size; ++lane) {
            auto& cur = cursors[lane];
            const auto& queue = lane_docs[lane];
            if (cur.next_doc >= queue.size()) continue;
            const std::size_t doc = queue[cur.next_doc];
            BatchSlot slot;
            slot.lane = lane;
            slot.doc = doc;
            slot.sentence = cur.next_sentence;
            slot.paragraph_start = docs[doc].sentences[cur.next_sentence].paragraph_start();
            step.slots.push_back(slot);
            any = true;
            if (++cur.next_sentence >= docs[doc].sentences.size()) {
                cur.next_sentence = 0;
                ++cur.next_doc;
            }
        }
        if (any) schedule.steps.push_back(std::move(step));
    }
    return schedule;
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a_hex(buf.str());
}

}  // namespace ctxseq
