#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctxseq {

// Reserved vocabulary layout, fixed for checkpoint portability.
inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kBosId = 1;
inline constexpr std::size_t kEosId = 2;
inline constexpr std::size_t kUnkId = 3;
inline constexpr std::size_t kMarkerId = 4;
inline constexpr std::size_t kNumReserved = 5;

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kBosToken = "<bos>";
inline constexpr const char* kEosToken = "<eos>";
inline constexpr const char* kUnkToken = "UNK";
inline constexpr const char* kDefaultMarker = "*";

// Bidirectional token<->id map. Ids 0..4 are always the reserved tokens;
// the paragraph marker is reserved and exempt from the size cap.
class Vocabulary {
  public:
    explicit Vocabulary(std::size_t max_size, std::string marker = kDefaultMarker);

    // Reconstructs a vocabulary from an id-ordered token list (line 4 is the
    // marker). Fails unless lines 0..3 are the fixed reserved tokens.
    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

    std::size_t id_of(const std::string& token) const;  // UNK id when absent
    const std::string& token_of(std::size_t id) const;
    bool contains(const std::string& token) const;
    std::size_t size() const { return id_to_token_.size(); }
    std::size_t max_size() const { return max_size_; }
    const std::string& marker() const { return id_to_token_[kMarkerId]; }
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    // Appends a non-reserved token; enforces the size cap.
    std::size_t add_token(const std::string& token);

    std::string content_hash() const;  // FNV-1a over the id-ordered token list

    void save(const std::string& path) const;  // one token per line, id order
    static Vocabulary load(const std::string& path);

  private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, std::size_t> token_to_id_;
    std::size_t max_size_;
};

struct SentencePair {
    std::vector<std::string> src;
    std::vector<std::string> tgt;

    bool operator==(const SentencePair&) const = default;
};

struct Paragraph {
    std::vector<SentencePair> sentences;

    bool operator==(const Paragraph&) const = default;
};

// Ordered paragraphs of aligned sentence pairs. The paragraph boundary is
// the context boundary.
struct Document {
    std::string doc_id;
    std::vector<Paragraph> paragraphs;

    bool operator==(const Document&) const = default;
    std::size_t sentence_count() const;
};

// Aligned corpus files: whitespace-tokenized lines, a blank line in both
// files breaks a paragraph, "#doc <id>" in both files starts a document.
std::vector<Document> load_corpus(const std::string& src_path, const std::string& tgt_path);

// Same line format, single file; target sides are left empty.
std::vector<Document> load_source_documents(const std::string& src_path);

void write_corpus(const std::vector<Document>& docs, const std::string& src_path,
                  const std::string& tgt_path);

// Any token made of ASCII digits only becomes "0".
std::vector<std::string> normalize_numbers(std::vector<std::string> tokens);
void normalize_numbers(Document& doc);

// Prepends the marker to the source side of each paragraph's first sentence.
// Idempotent.
void insert_paragraph_marker(Document& doc, const std::string& marker = kDefaultMarker);

enum class Side { source, target };

// Frequency-ranked vocabulary (ties lexicographic) after number
// normalization; keeps the top max_size - 5 content tokens.
Vocabulary build_vocab(const std::vector<Document>& docs, Side side, std::size_t max_size,
                       const std::string& marker = kDefaultMarker);

std::vector<std::size_t> encode_tokens(const Vocabulary& vocab,
                                       const std::vector<std::string>& tokens, bool add_eos);
std::vector<std::string> decode_tokens(const Vocabulary& vocab,
                                       const std::vector<std::size_t>& ids);

// Id-space sentence with its place inside the document.
struct EncodedSentence {
    std::vector<std::size_t> src_ids;  // unframed (no EOS)
    std::vector<std::size_t> tgt_ids;  // unframed (no BOS/EOS)
    std::size_t paragraph_index = 0;
    std::size_t sentence_index = 0;  // within the paragraph
    bool paragraph_start() const { return sentence_index == 0; }
};

struct EncodedDocument {
    std::string doc_id;
    std::vector<EncodedSentence> sentences;  // document order
};

EncodedDocument encode_document(const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                const Document& doc);

// Model-facing framing of stored ids.
std::vector<std::size_t> frame_source(const std::vector<std::size_t>& ids);  // ... EOS
std::vector<std::size_t> frame_target(const std::vector<std::size_t>& ids);  // BOS ... EOS

// Preprocessed corpus TSV:
// doc_id \t paragraph_index \t sentence_index \t src ids \t tgt ids
void write_preprocessed_tsv(const std::string& path, const std::vector<EncodedDocument>& docs);
std::vector<EncodedDocument> read_preprocessed_tsv(const std::string& path);

// One sentence position of one document, scheduled into a step.
struct BatchSlot {
    std::size_t lane = 0;
    std::size_t doc = 0;       // index into the document list
    std::size_t sentence = 0;  // flat index within the document
    bool paragraph_start = false;
};

struct BatchStep {
    std::vector<BatchSlot> slots;
};

// Documents are dealt to B lanes greedily by sentence count (longest first,
// least-loaded lane wins, lowest lane index on ties); each step advances
// every non-exhausted lane by one sentence, so a sentence is always
// scheduled after its in-document predecessor.
struct BatchSchedule {
    std::size_t num_lanes = 0;
    std::vector<BatchStep> steps;
};

BatchSchedule make_batches(const std::vector<EncodedDocument>& docs, std::size_t batch_size);

// 64-bit FNV-1a, hex-encoded. Used for vocabulary and input-file digests.
std::string fnv1a_hex(std::string_view bytes);
std::string file_digest(const std::string& path);

}  // namespace ctxseq
