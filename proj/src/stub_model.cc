// Offline template model. Output is a deterministic function of the seed,
// model id, genre and story parameters.

#include <random>

#include "synthehr/generation.h"

namespace synthehr {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  Writer(std::uint64_t seed, const ParameterGrid &grid, const StoryParameters &p)
      : rng_(seed), grid_(grid), p_(p) {
    female_ = grid.value(p, Dimension::kGender).key == "female";
  }

  template <std::size_t N>
  std::string_view pick(const std::array<std::string_view, N> &options) {
    return options[rng_() % N];
  }
  bool chance(unsigned percent) { return rng_() % 100 < percent; }

  std::string he() const { return female_ ? "she" : "he"; }
  std::string He() const { return female_ ? "She" : "He"; }
  std::string his() const { return female_ ? "her" : "his"; }
  std::string value(Dimension d) const { return grid_.value(p_, d).text; }
  bool has(Dimension d) const { return !grid_.value(p_, d).not_applicable(); }
  std::string key(Dimension d) const { return grid_.value(p_, d).key; }

  std::string diagnosis() const {
    std::string d = value(Dimension::kDiagnosis);
    if (!d.empty() && d.back() == '.') d.pop_back();
    return d;
  }
  bool bipolar() const {
    const std::string k = key(Dimension::kDiagnosis);
    return k.find("bipolar") != std::string::npos || k.find("cyclothymic") != std::string::npos;
  }
  std::string medication_plan() {
    if (bipolar()) return std::string(pick(std::array<std::string_view, 3>{
        "a mood stabiliser such as lithium", "lithium with regular blood level monitoring",
        "lamotrigine as a mood stabiliser"}));
    return std::string(pick(std::array<std::string_view, 3>{
        "an antidepressant such as sertraline", "an SSRI antidepressant",
        "fluoxetine as an alternative antidepressant"}));
  }

 private:
  std::mt19937_64 rng_;
  const ParameterGrid &grid_;
  const StoryParameters &p_;
  bool female_ = true;
};

void para(std::string &out, const std::string &text) {
  if (!out.empty()) out += "\n\n";
  out += text;
}

std::string initial_assessment(Writer &w) {
  std::string out = "**Psychiatric Assessment**";
  para(out, "The patient is a " + w.value(Dimension::kAge) + "-year-old " +
                w.value(Dimension::kEthnicity) + " " + w.value(Dimension::kGender) +
                " who presents with symptoms consistent with " + w.diagnosis() + ". " + w.He() +
                " reported " +
                std::string(w.pick(std::array<std::string_view, 3>{
                    "low mood and poor sleep", "fluctuating mood and irritability",
                    "reduced energy and poor concentration"})) +
                " over recent months. " +
                std::string(w.pick(std::array<std::string_view, 2>{
                    "There were signs of psychomotor retardation during the interview.",
                    "There was no evidence of psychotic symptoms at the time of assessment."})));
  std::string mse = "**Mental State Examination**";
  para(out, mse);
  para(out, w.He() + " appeared " +
                std::string(w.pick(std::array<std::string_view, 2>{"well kempt", "tired"})) +
                " and maintained good eye contact. " + w.He() +
                " described " + w.his() + " mood as " +
                std::string(w.pick(std::array<std::string_view, 3>{"low", "up and down", "flat"})) +
                ". However, " + w.he() + " denied any intent to harm " +
                (w.he() == "she" ? "herself" : "himself") + ". Insight was " +
                std::string(w.pick(std::array<std::string_view, 2>{"partial", "good"})) + ".");
  std::string hist = "**Psychiatric History**";
  para(out, hist);
  std::string h = w.He() + " has a history of " + w.value(Dimension::kTreatment) + ".";
  if (w.has(Dimension::kMedication)) h += " " + w.He() + " is currently " + w.value(Dimension::kMedication) + ".";
  if (w.has(Dimension::kRisks)) {
    h += " Additionally, the patient reported " + w.value(Dimension::kRisks) + ".";
  }
  h += " It is essential to consider these factors when planning treatment.";
  para(out, h);
  para(out, "The team will consider " + w.medication_plan() +
                " and a course of CBT. The prognosis is likely to improve with consistent "
                "engagement.");
  return out;
}

std::string gp_letter(Writer &w) {
  std::string out = "Dear Dr " +
                    std::string(w.pick(std::array<std::string_view, 3>{"Smith", "Patel", "Jones"})) +
                    ",";
  para(out, "I am writing to provide an update on our patient, a " + w.value(Dimension::kAge) +
                "-year-old " + w.value(Dimension::kGender) + " with " + w.diagnosis() +
                ". " + w.He() + " attended clinic this week and engaged well.");
  std::string body = "Since the last review, " + w.his() + " mood has " +
                     std::string(w.pick(std::array<std::string_view, 3>{
                         "improved slightly", "remained variable", "been stable"})) +
                     ".";
  if (w.has(Dimension::kMedication)) {
    body += " " + w.He() + " is " + w.value(Dimension::kMedication) + ".";
    body += " However, due to the side effects, the dose may need adjustment.";
  }
  if (w.has(Dimension::kRisks)) {
    body += " We discussed " + w.value(Dimension::kRisks) + " and agreed a safety plan.";
  }
  para(out, body);
  para(out, "I recommend that you continue " + w.medication_plan() +
                " and review " + w.his() + " progress in four weeks. You should contact the "
                "team if there is any deterioration.");
  para(out, "Yours sincerely,\n\nConsultant Psychiatrist");
  return out;
}

std::string referral(Writer &w) {
  std::string out = "**Referral and Handover**";
  para(out, "I am writing to refer this " + w.value(Dimension::kAge) + "-year-old " +
                w.value(Dimension::kGender) + " patient with " + w.diagnosis() +
                " to your service. " + w.He() + " has a history of " +
                w.value(Dimension::kTreatment) + ".");
  std::string risk = "**Risk Assessment**";
  para(out, risk);
  std::string r = w.has(Dimension::kRisks)
                      ? "The main identified risk is " + w.value(Dimension::kRisks) + "."
                      : std::string("No specific risks were identified at this time.");
  r += " The patient must be reviewed within two weeks. " +
       std::string(w.pick(std::array<std::string_view, 2>{
           "Furthermore, the family are supportive.",
           "Unfortunately, engagement with services has been inconsistent."}));
  para(out, r);
  para(out, "We believe that " + w.he() + " would benefit from " + w.medication_plan() +
                " alongside psychological therapy. " + w.He() +
                " will attend the first appointment with a family member.");
  para(out, "In conclusion, I look forward to working together on " + w.his() + " care.");
  return out;
}

std::string care_plan(Writer &w) {
  std::string out = "**Advance Care Plan**";
  para(out, "**1. Current Situation**");
  para(out, "- The patient has " + w.diagnosis() + ".\n- " + w.He() + " has " +
                w.value(Dimension::kTreatment) + ".");
  para(out, "**2. Treatment Goals**");
  para(out, "- Reduce the risk of relapse.\n- Improve sleep and daily routine.\n- " +
                std::string(w.pick(std::array<std::string_view, 2>{
                    "Maintain contact with family and friends.",
                    "Return to work or study when ready."})));
  para(out, "**3. Interventions**");
  std::string iv = "- Monitor medication adherence.\n- Offer " + w.medication_plan() + ".";
  if (w.has(Dimension::kRisks)) iv += "\n- Review " + w.value(Dimension::kRisks) + " at each contact.";
  iv += "\n- The care coordinator is responsible for arranging reviews.";
  para(out, iv);
  para(out, "**4. Patient Statement**");
  para(out, "\"I will adhere to my medication regimen and I will collaborate with my care team.\"");
  return out;
}

}  // namespace

std::string StubBackend::complete(const PromptPair &prompt, const ModelConfig &config) {
  std::uint64_t h = fnv1a(config.model_id, seed_ ^ 0x9E3779B97F4A7C15ULL);
  h = fnv1a(genre_code(prompt.genre_id), h);
  h = fnv1a(std::to_string(prompt.story_id), h);
  const StoryParameters p = grid_.at(prompt.story_id);
  Writer w(h, grid_, p);
  switch (prompt.genre_id) {
    case GenreId::kInit: return initial_assessment(w);
    case GenreId::kGP: return gp_letter(w);
    case GenreId::kRef: return referral(w);
    case GenreId::kCare: return care_plan(w);
  }
  return {};
}

}  // namespace synthehr
