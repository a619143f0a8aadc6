"""Deterministic fixture study sets matching the published dataset shape.

The original study data cannot be redistributed here, so these generators
synthesize stand-in corpora with exactly the documented composition: use
case 1 (insurance claims) with 489 paragraphs (21 compliance + 28
informative group A, 220 B, 220 C) over a 1/7/31 process tree, use case 2
(bank customer onboarding) with 311 paragraphs (24 + 7, 140, 140) over
1/7/19, plus the 147- and 93-paragraph crowd subsets. Everything is seeded,
so regeneration is byte-stable.
"""

from __future__ import annotations

import json
import random
import zlib
from dataclasses import dataclass
from pathlib import Path

from regrel.corpus import (
    Composition,
    Paragraph,
    RegulatoryDocument,
    StudySet,
    save_study_set,
    write_jsonl,
)
from regrel.crowd import Phase1Answer, Phase2Answer, WorkerSubmission, write_submissions
from regrel.evaluation import GoldStandard, save_gold, validate_gold
from regrel.labels import LabelSet, RelevanceType, close_labels
from regrel.process import BusinessContext, ProcessModel, ProcessNode


@dataclass
class UseCaseFixture:
    use_case_id: str
    model: ProcessModel
    documents: dict[str, RegulatoryDocument]
    study_set: StudySet
    gold: GoldStandard
    expected: Composition
    crowd_set: StudySet
    crowd_gold: GoldStandard
    crowd_expected: Composition


_FILLERS = [
    "Each step is written to the case record so a reviewer can retrace who did what and when.",
    "Unclear items are routed to a senior handler before the work item is allowed to move on.",
    "The team checks the gathered details against the policy terms that apply to the case.",
    "Timestamps and the acting role are captured for every change made during this step.",
    "Any deviation from the documented procedure has to be noted together with its reason.",
]


def _describe(rng: random.Random, base: str) -> str:
    fillers = rng.sample(_FILLERS, 2)
    return f"{base} {fillers[0]} {fillers[1]}"


def _build_model(
    rng: random.Random,
    model_id: str,
    context: BusinessContext,
    root: tuple[str, str],
    subprocesses: list[tuple[str, str, list[tuple[str, str, str]]]],
) -> ProcessModel:
    root_name, root_desc = root
    root_id = f"{model_id}-p1"
    nodes = [
        ProcessNode(root_id, "L1_process", root_name, _describe(rng, root_desc), None, "process")
    ]
    for si, (sub_name, sub_desc, tasks) in enumerate(subprocesses, start=1):
        sub_id = f"{model_id}-s{si}"
        nodes.append(
            ProcessNode(
                sub_id, "L2_subprocess", sub_name, _describe(rng, sub_desc), root_id, "subprocess"
            )
        )
        for ti, (task_name, task_desc, kind) in enumerate(tasks, start=1):
            nodes.append(
                ProcessNode(
                    f"{sub_id}-t{ti}",
                    "L3_task_or_event",
                    task_name,
                    _describe(rng, task_desc),
                    sub_id,
                    kind,
                )
            )
    return ProcessModel(model_id=model_id, context=context, nodes=nodes)


def _sentences(rng: random.Random, vocab: list[str], n: int) -> str:
    openers = [
        "The organisation", "The responsible officer", "Each party", "The provider",
        "A person covered by this part", "The entity",
    ]
    verbs = ["must document", "shall review", "is required to maintain", "must disclose",
             "shall verify", "must retain", "is expected to monitor"]
    tails = [
        "within the period set out in this section",
        "before the matter is closed",
        "in a form approved for that purpose",
        "unless an exemption applies",
        "at least once in every reporting cycle",
    ]
    parts = []
    for _ in range(n):
        parts.append(
            f"{rng.choice(openers)} {rng.choice(verbs)} {rng.choice(vocab)} "
            f"and {rng.choice(vocab)} {rng.choice(tails)}."
        )
    return " ".join(parts)


def _task_vocab(model: ProcessModel, node_ids: list[str]) -> list[str]:
    words = []
    for nid in node_ids:
        words.extend(w.lower() for w in model.node(nid).name.split() if len(w) > 3)
    return words or ["the process"]


def _make_gold_targets(model: ProcessModel) -> tuple[list[str], dict[str, str]]:
    tasks = [n.node_id for n in model.nodes_at(3)]
    return tasks, model.parent_map()


def _build_study_set(
    rng: random.Random,
    use_case_id: str,
    model: ProcessModel,
    documents: dict[str, RegulatoryDocument],
    doc_cycle: dict[str, list[str]],
    counts: Composition,
    business_vocab: list[str],
    offtopic_vocab: list[str],
) -> tuple[StudySet, GoldStandard]:
    paragraphs: list[Paragraph] = []
    labels: dict[str, LabelSet] = {}
    provenance: dict[str, str] = {}
    tasks, parent_of = _make_gold_targets(model)
    serial = 0

    def next_id() -> str:
        nonlocal serial
        serial += 1
        return f"{use_case_id}-para-{serial:04d}"

    def add(group: str, hint: str | None, body: str, doc_id: str, section: str):
        pid = next_id()
        paragraphs.append(
            Paragraph(
                para_id=pid,
                doc_id=doc_id,
                section_title=section,
                subsection=f"s{serial % 9 + 1}",
                body=body,
                group=group,
                gold_type_hint=hint,
            )
        )
        return pid

    def doc_for(group: str, i: int) -> str:
        pool = doc_cycle[group]
        return pool[i % len(pool)]

    # group A: process-relevant; bodies borrow vocabulary from their gold tasks
    a_specs = [("compliance", counts.group_a_compliance), ("informative", counts.group_a_informative)]
    for hint, count in a_specs:
        for i in range(count):
            chosen = rng.sample(tasks, rng.randint(1, 3))
            vocab = _task_vocab(model, chosen)
            if hint == "compliance":
                body = _sentences(rng, vocab, 3)
            else:
                body = (
                    f"For information: customers and counterparties dealing with "
                    f"{rng.choice(vocab)} should be aware of how {rng.choice(vocab)} "
                    f"is handled. " + _sentences(rng, vocab, 2).replace("must", "may")
                )
            pid = add("A", hint, body, doc_for("A", i), f"Part {i % 7 + 1}")
            label_type = RelevanceType.parse(hint)
            label = LabelSet(level3={nid: label_type for nid in chosen})
            labels[pid] = close_labels(label, parent_of)
            provenance[pid] = "fixture gold: seeded task assignment"
    # group B: business-relevant, process-irrelevant
    for i in range(counts.group_b):
        body = _sentences(rng, business_vocab, 3)
        pid = add("B", None, body, doc_for("B", i), f"Division {i % 11 + 1}")
        labels[pid] = LabelSet()
        provenance[pid] = "fixture gold: business-relevant only"
    # group C: neither
    for i in range(counts.group_c):
        body = _sentences(rng, offtopic_vocab, 3)
        pid = add("C", None, body, doc_for("C", i), f"Schedule {i % 5 + 1}")
        labels[pid] = LabelSet()
        provenance[pid] = "fixture gold: out of business scope"

    rng.shuffle(paragraphs)
    study_set = StudySet(use_case_id=use_case_id, paragraphs=paragraphs, documents=documents)
    gold = GoldStandard(use_case_id=use_case_id, labels=labels, provenance=provenance)
    validate_gold(gold, model=model, groups=study_set.groups)
    return study_set, gold


def _crowd_subset(
    study_set: StudySet, gold: GoldStandard, expected: Composition, suffix: str
) -> tuple[StudySet, GoldStandard]:
    picked: list[Paragraph] = []
    quota = {
        ("A", "compliance"): expected.group_a_compliance,
        ("A", "informative"): expected.group_a_informative,
        ("B", None): expected.group_b,
        ("C", None): expected.group_c,
    }
    taken = {k: 0 for k in quota}
    for para in study_set.paragraphs:
        key = (para.group, para.gold_type_hint if para.group == "A" else None)
        if key in quota and taken[key] < quota[key]:
            picked.append(para)
            taken[key] += 1
    crowd_set = StudySet(
        use_case_id=f"{study_set.use_case_id}-{suffix}",
        paragraphs=picked,
        documents=study_set.documents,
    )
    crowd_gold = GoldStandard(
        use_case_id=crowd_set.use_case_id,
        labels={p.para_id: gold.labels[p.para_id] for p in picked},
        provenance={
            p.para_id: gold.provenance[p.para_id] for p in picked if p.para_id in gold.provenance
        },
    )
    return crowd_set, crowd_gold


def use_case_1() -> UseCaseFixture:
    rng = random.Random(1001)
    context = BusinessContext(
        business_id="uc1",
        location="Australia",
        domain="travel insurance",
        size="large insurer, about 1200 employees",
    )
    model = _build_model(
        rng,
        "uc1",
        context,
        (
            "Travel insurance claim handling",
            "End-to-end handling of travel insurance claims lodged by customers, from first "
            "registration through eligibility assessment, payout calculation and quality review.",
        ),
        [
            ("Register claim", "A new claim is recorded with the customer, policy and trip details.",
             [("Receive claim form", "The lodged claim form and attachments are received and stored.", "task"),
              ("Verify policy number", "The quoted policy number is checked against the policy register.", "task"),
              ("Create claim file", "A claim file with a unique reference is created for the case.", "task"),
              ("Acknowledge receipt", "An acknowledgement with the claim reference is sent to the customer.", "throwing_event"),
              ("Classify claim category", "The claim is classified by loss category such as medical, cancellation or baggage.", "task")]),
            ("Check completeness", "The file is checked for all information required to assess the claim.",
             [("Review submitted documents", "Submitted receipts, reports and certificates are reviewed for completeness.", "task"),
              ("Identify missing evidence", "Missing evidence items are identified and listed for follow-up.", "task"),
              ("Request additional documents", "A request for the missing documents is issued to the customer.", "throwing_event"),
              ("Record completeness outcome", "The completeness outcome and outstanding items are recorded on the file.", "task")]),
            ("Communicate with customer", "Customer contact is managed during the life of the claim.",
             [("Answer status enquiries", "Status enquiries from the customer are answered from the case record.", "task"),
              ("Update contact details", "Changed customer contact details are validated and updated.", "task"),
              ("Notify assessment start", "The customer is notified that the detailed assessment has started.", "throwing_event"),
              ("Log customer complaint", "A complaint raised by the customer is logged for separate handling.", "task")]),
            ("Assess eligibility", "Coverage and eligibility of the claim under the policy are decided.",
             [("Check policy coverage", "The loss event is checked against the cover and exclusions of the policy.", "task"),
              ("Check premium status", "Premium payment status at the date of loss is confirmed.", "task"),
              ("Assess supporting evidence", "The weight and consistency of the supporting evidence is assessed.", "task"),
              ("Screen for fraud indicators", "The claim is screened against documented fraud indicators.", "task"),
              ("Decide eligibility", "The eligibility decision with its grounds is taken and recorded.", "task")]),
            ("Calculate payout", "The payable amount for an eligible claim is calculated and approved.",
             [("Itemise covered losses", "Covered loss items are itemised with their claimed amounts.", "task"),
              ("Apply excess and limits", "The policy excess and the applicable per-item limits are applied.", "task"),
              ("Convert foreign amounts", "Amounts in foreign currency are converted at the documented rate.", "task"),
              ("Approve payout amount", "The calculated payout is approved within the delegation schedule.", "task"),
              ("Issue payment instruction", "A payment instruction is issued to the disbursement system.", "throwing_event")]),
            ("Quality check during payout", "Randomly selected live cases are re-checked before money leaves.",
             [("Select cases for review", "A random sample of in-flight cases is selected for review.", "task"),
              ("Re-verify calculation", "The payout calculation of a sampled case is re-verified independently.", "task"),
              ("Confirm payee details", "Payee account details are confirmed against the claim file.", "task"),
              ("Release or hold payment", "The payment is released or held depending on the re-check result.", "task")]),
            ("Post-payout audit", "Closed claims are audited after payment for correctness and learning.",
             [("Sample closed claims", "A periodic sample of closed claims is drawn for audit.", "task"),
              ("Audit decision trail", "The decision trail of a sampled claim is audited end to end.", "task"),
              ("Record audit findings", "Audit findings and required corrections are recorded.", "task"),
              ("Escalate systemic issues", "Systemic issues found in audit are escalated to management.", "throwing_event")]),
        ],
    )
    documents = {
        d.doc_id: d
        for d in [
            RegulatoryDocument("uc1-doc-internal-claims", "Internal claims handling manual",
                               "internal", "Australia", "travel insurance"),
            RegulatoryDocument("uc1-doc-insurance-contracts", "Insurance contracts act",
                               "external", "Australia", "insurance"),
            RegulatoryDocument("uc1-doc-general-insurance-code", "General insurance practice code",
                               "external", "Australia", "insurance"),
            RegulatoryDocument("uc1-doc-privacy-principles", "Privacy principles",
                               "external", "Australia", "domain-independent"),
            RegulatoryDocument("uc1-doc-fair-work", "Fair work act",
                               "external", "Australia", "domain-independent"),
            RegulatoryDocument("uc1-doc-corporations", "Corporations act",
                               "external", "Australia", "domain-independent"),
            RegulatoryDocument("uc1-doc-maritime", "Marine safety orders",
                               "external", "Australia", "maritime transport"),
            RegulatoryDocument("uc1-doc-food", "Food standards code",
                               "external", "Australia", "food production"),
        ]
    }
    doc_cycle = {
        "A": ["uc1-doc-internal-claims", "uc1-doc-insurance-contracts",
              "uc1-doc-general-insurance-code"],
        "B": ["uc1-doc-privacy-principles", "uc1-doc-fair-work", "uc1-doc-corporations",
              "uc1-doc-internal-claims"],
        "C": ["uc1-doc-maritime", "uc1-doc-food"],
    }
    expected = Composition(total=489, group_a=49, group_a_compliance=21,
                           group_a_informative=28, group_b=220, group_c=220)
    business_vocab = [
        "employee leave entitlements", "board reporting", "workplace safety training",
        "personal information handling", "record retention schedules", "conflict declarations",
        "procurement approvals", "remuneration disclosure",
    ]
    offtopic_vocab = [
        "vessel ballast water", "galley food temperatures", "cargo lashing points",
        "pasteurisation holding times", "deck crane inspections", "allergen labelling",
    ]
    study_set, gold = _build_study_set(
        rng, "uc1", model, documents, doc_cycle, expected, business_vocab, offtopic_vocab
    )
    crowd_expected = Composition(total=147, group_a=49, group_a_compliance=21,
                                 group_a_informative=28, group_b=49, group_c=49)
    crowd_set, crowd_gold = _crowd_subset(study_set, gold, crowd_expected, "crowd")
    return UseCaseFixture("uc1", model, documents, study_set, gold, expected,
                          crowd_set, crowd_gold, crowd_expected)


def use_case_2() -> UseCaseFixture:
    rng = random.Random(2002)
    context = BusinessContext(
        business_id="uc2",
        location="global, headquartered in Germany",
        domain="retail banking",
        size="multinational bank, about 40000 employees",
    )
    model = _build_model(
        rng,
        "uc2",
        context,
        (
            "Customer onboarding with identity checks",
            "Opening a new bank account for a customer, with identification, due diligence, "
            "risk scoring and a manual review path before the account is activated or declined.",
        ),
        [
            ("Collect applicant data", "Personal and contact details of the applicant are collected.",
             [("Capture identity details", "Name, birth date and identification document data are captured.", "task"),
              ("Capture residence details", "Residential address and tax residency details are captured.", "task"),
              ("Confirm application submission", "The applicant is informed that the application was submitted.", "throwing_event")]),
            ("Validate documents", "Submitted identification documents are validated.",
             [("Check document authenticity", "Security features of the identification document are checked.", "task"),
              ("Match photo and applicant", "The document photo is matched against the applicant likeness.", "task"),
              ("Record validation result", "The validation result is recorded with the checked features.", "task")]),
            ("Screen against watchlists", "The applicant is screened against sanction and politically exposed lists.",
             [("Run sanctions screening", "The applicant data is screened against current sanction lists.", "task"),
              ("Run adverse media search", "Public adverse media about the applicant is searched and summarised.", "task"),
              ("Flag potential matches", "Potential watchlist matches are flagged for analyst disposition.", "throwing_event")]),
            ("Score customer risk", "A risk level for the prospective customer is derived.",
             [("Compute risk score", "A risk score is computed from residence, product and screening inputs.", "task"),
              ("Assign risk class", "The applicant is assigned a low, medium or high risk class.", "task"),
              ("Document scoring basis", "The inputs and rationale of the risk score are documented.", "task")]),
            ("Perform manual review", "High-risk or unclear applications are reviewed by an analyst.",
             [("Review flagged application", "The flagged application is reviewed against the acceptance guidelines.", "task"),
              ("Request clarification", "Additional clarification or documents are requested from the applicant.", "throwing_event"),
              ("Record review decision", "The review decision and its grounds are recorded.", "task")]),
            ("Decide and open account", "The onboarding decision is taken and the account is opened or declined.",
             [("Approve or decline onboarding", "The final onboarding decision is taken under the approval matrix.", "task"),
              ("Open account in core system", "An approved account is opened in the core banking system.", "task")]),
            ("Welcome or decline customer", "The applicant is informed about the outcome.",
             [("Send welcome package", "A welcome package with terms and access credentials is sent.", "throwing_event"),
              ("Send decline notice", "A decline notice with the permissible reasons is sent.", "throwing_event")]),
        ],
    )
    documents = {
        d.doc_id: d
        for d in [
            RegulatoryDocument("uc2-doc-internal-onboarding", "Internal onboarding guideline",
                               "internal", "global", "retail banking"),
            RegulatoryDocument("uc2-doc-aml-directive", "Anti money laundering directive",
                               "external", "European Union", "banking"),
            RegulatoryDocument("uc2-doc-customer-due-diligence", "Customer due diligence rule",
                               "external", "United States", "banking"),
            RegulatoryDocument("uc2-doc-banking-supervision", "Banking supervision standards",
                               "external", "international", "banking"),
            RegulatoryDocument("uc2-doc-data-protection", "Data protection regulation",
                               "external", "European Union", "domain-independent"),
            RegulatoryDocument("uc2-doc-labour-code", "Labour code",
                               "external", "Germany", "domain-independent"),
            RegulatoryDocument("uc2-doc-pharma-practice", "Pharmaceutical manufacturing practice",
                               "external", "European Union", "pharmaceuticals"),
            RegulatoryDocument("uc2-doc-aviation", "Civil aviation order",
                               "external", "international", "aviation"),
        ]
    }
    doc_cycle = {
        "A": ["uc2-doc-aml-directive", "uc2-doc-customer-due-diligence",
              "uc2-doc-internal-onboarding", "uc2-doc-banking-supervision"],
        "B": ["uc2-doc-data-protection", "uc2-doc-labour-code", "uc2-doc-internal-onboarding",
              "uc2-doc-banking-supervision"],
        "C": ["uc2-doc-pharma-practice", "uc2-doc-aviation"],
    }
    expected = Composition(total=311, group_a=31, group_a_compliance=24,
                           group_a_informative=7, group_b=140, group_c=140)
    business_vocab = [
        "employee working hours", "data subject requests", "outsourcing registers",
        "capital adequacy reporting", "staff background checks", "branch security plans",
        "whistleblower channels", "marketing consent records",
    ]
    offtopic_vocab = [
        "sterile filling lines", "batch release certificates", "cabin crew rostering",
        "airworthiness directives", "cleanroom gowning", "runway friction testing",
    ]
    study_set, gold = _build_study_set(
        rng, "uc2", model, documents, doc_cycle, expected, business_vocab, offtopic_vocab
    )
    crowd_expected = Composition(total=93, group_a=31, group_a_compliance=24,
                                 group_a_informative=7, group_b=31, group_c=31)
    crowd_set, crowd_gold = _crowd_subset(study_set, gold, crowd_expected, "crowd")
    return UseCaseFixture("uc2", model, documents, study_set, gold, expected,
                          crowd_set, crowd_gold, crowd_expected)


def sample_crowd_submissions(fixture: UseCaseFixture, workers: int = 3) -> list:
    """Plausible worker submissions over the crowd subset: mostly agreeing
    with gold, with seeded noise and occasional quality-check failures.
    Phase 2 is only published for paragraphs whose phase-1 answers contain a
    relevant vote, mirroring the two-phase task flow."""
    rng = random.Random(f"{fixture.use_case_id}-crowd")
    gold = fixture.crowd_gold
    submissions = []
    tick = 0

    def stamp() -> str:
        nonlocal tick
        tick += 1
        return f"2024-03-{tick // 2000 + 1:02d}T{tick // 60 % 24:02d}:{tick % 60:02d}:00"

    for para in fixture.crowd_set.paragraphs:
        labels = gold.labels[para.para_id]
        phase1_votes = []
        for w in range(workers):
            worker_id = f"worker-{(zlib.crc32(para.para_id.encode()) + w) % 40:02d}"
            truly_relevant = labels.level1.relevant
            says_relevant = rng.random() < (0.85 if truly_relevant else 0.12)
            if says_relevant:
                candidates = [n for n, t in labels.level2.items() if t.relevant]
                if not candidates:
                    candidates = [rng.choice(sorted(fixture.model.node_ids_at(2)))]
                chosen = {
                    sid for sid in candidates if rng.random() < 0.8
                } or {candidates[0]}
                answer = Phase1Answer(True, frozenset(chosen))
                options = frozenset(chosen)
            else:
                answer = Phase1Answer(False)
                options = frozenset({"Not relevant"})
            failed_attention = rng.random() < 0.06
            failed_questions = rng.random() < 0.04
            submissions.append(
                WorkerSubmission(
                    worker_id=worker_id,
                    para_id=para.para_id,
                    phase="phase1",
                    phase1_answer=answer,
                    justification=f"worker view on {para.para_id}",
                    test_question_answers=(True, not failed_questions),
                    clicked_forbidden_option=failed_attention,
                    selected_options=options,
                    received_at=stamp(),
                )
            )
            phase1_votes.append(says_relevant)
        if not any(phase1_votes):
            continue
        for w in range(workers):
            worker_id = f"worker-{(zlib.crc32(para.para_id.encode()) + w + 7) % 40:02d}"
            relevant_tasks = {n: t for n, t in labels.level3.items() if t.relevant}
            picked = {
                n: t for n, t in relevant_tasks.items() if rng.random() < 0.75
            }
            answer = Phase2Answer(dict(picked))
            submissions.append(
                WorkerSubmission(
                    worker_id=worker_id,
                    para_id=para.para_id,
                    phase="phase2",
                    phase2_answer=answer,
                    justification=f"task match for {para.para_id}",
                    test_question_answers=(True, True),
                    clicked_forbidden_option=rng.random() < 0.05,
                    selected_options=frozenset(picked) or frozenset({"Not relevant"}),
                    received_at=stamp(),
                )
            )
    return submissions


def sample_judge_replies(fixture: UseCaseFixture) -> list[str]:
    """Scripted chat replies in study-set order: gold labels with seeded
    noise, for offline judge runs against the bundled data."""
    rng = random.Random(f"{fixture.use_case_id}-replies")
    replies = []
    for para in fixture.study_set.paragraphs:
        labels = fixture.gold.labels[para.para_id]
        if labels.level1.relevant and rng.random() < 0.9:
            reply = {
                "level1": labels.level1.value,
                "level2": {n: t.value for n, t in labels.level2.items() if rng.random() < 0.85},
                "level3": {n: t.value for n, t in labels.level3.items() if rng.random() < 0.8},
                "justification": f"the text addresses duties handled in this process "
                                 f"({para.section_title}).",
            }
        elif not labels.level1.relevant and rng.random() < 0.12:
            sub = rng.choice(sorted(fixture.model.node_ids_at(2)))
            reply = {
                "level1": "informative",
                "level2": {sub: "informative"},
                "level3": {},
                "justification": "the topic sounds adjacent to this process.",
            }
        else:
            reply = {"level1": "irrelevant", "level2": {}, "level3": {},
                     "justification": "no clear relation to the process."}
        replies.append(json.dumps({"content": json.dumps(reply)}, ensure_ascii=False))
    return replies


def write_fixture(fixture: UseCaseFixture, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "documents.jsonl", (d.to_json() for d in fixture.documents.values()))
    save_study_set(fixture.study_set, out / "study_set.jsonl")
    save_study_set(fixture.crowd_set, out / "crowd_study_set.jsonl")
    save_gold(fixture.gold, out / "gold.jsonl")
    save_gold(fixture.crowd_gold, out / "crowd_gold.jsonl")
    (out / "process.json").write_text(
        json.dumps(fixture.model.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    (out / "expected_composition.json").write_text(
        json.dumps(fixture.expected.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    (out / "crowd_expected_composition.json").write_text(
        json.dumps(fixture.crowd_expected.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    write_submissions(out / "submissions.jsonl", sample_crowd_submissions(fixture))
    (out / "scripted_replies.jsonl").write_text(
        "\n".join(sample_judge_replies(fixture)) + "\n", encoding="utf-8"
    )


def generate_all(out_dir: str | Path) -> None:
    write_fixture(use_case_1(), Path(out_dir) / "use_case_1")
    write_fixture(use_case_2(), Path(out_dir) / "use_case_2")


if __name__ == "__main__":
    import sys

    generate_all(sys.argv[1] if len(sys.argv) > 1 else "data")
