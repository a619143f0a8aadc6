import pytest

from regrel.corpus import Paragraph, RegulatoryDocument, StudySet
from regrel.labels import LabelSet, RelevanceType
from regrel.process import BusinessContext, ProcessModel, ProcessNode


@pytest.fixture
def small_model() -> ProcessModel:
    """1 process, 2 sub-processes, 4 tasks/events."""
    ctx = BusinessContext("biz", "Australia", "insurance", "mid-size")
    nodes = [
        ProcessNode("p1", "L1_process", "Claim handling",
                    "Handling of travel insurance claims from lodgement to payout.",
                    None, "process"),
        ProcessNode("s1", "L2_subprocess", "Register claim",
                    "A new claim is registered with customer and policy details.",
                    "p1", "subprocess"),
        ProcessNode("s2", "L2_subprocess", "Assess claim",
                    "The registered claim is assessed for coverage and payout.",
                    "p1", "subprocess"),
        ProcessNode("s1-t1", "L3_task_or_event", "Receive claim form",
                    "The claim form and attachments are received and stored.",
                    "s1", "task"),
        ProcessNode("s1-t2", "L3_task_or_event", "Acknowledge receipt",
                    "An acknowledgement with the claim reference is sent.",
                    "s1", "throwing_event"),
        ProcessNode("s2-t1", "L3_task_or_event", "Check policy coverage",
                    "The loss event is checked against cover and exclusions.",
                    "s2", "task"),
        ProcessNode("s2-t2", "L3_task_or_event", "Decide eligibility",
                    "The eligibility decision is taken and recorded.",
                    "s2", "task"),
    ]
    return ProcessModel(model_id="m1", context=ctx, nodes=nodes)


@pytest.fixture
def small_docs() -> dict[str, RegulatoryDocument]:
    docs = [
        RegulatoryDocument("doc-ext", "Insurance practice code", "external",
                           "Australia", "insurance"),
        RegulatoryDocument("doc-int", "Internal claims manual", "internal",
                           "Australia", "insurance"),
        RegulatoryDocument("doc-off", "Food standards code", "external",
                           "Australia", "food production"),
    ]
    return {d.doc_id: d for d in docs}


@pytest.fixture
def small_set(small_docs) -> StudySet:
    paragraphs = [
        Paragraph("pa-1", "doc-ext", "Part 1", "The insurer must acknowledge a claim "
                  "within ten business days of receiving the claim form.",
                  group="A", gold_type_hint="compliance"),
        Paragraph("pa-2", "doc-ext", "Part 2", "Customers may ask for the status of a "
                  "registered claim at any time during the assessment.",
                  group="A", gold_type_hint="informative"),
        Paragraph("pb-1", "doc-int", "Division 3", "Employees record their working hours "
                  "in the central time keeping system every week.", group="B"),
        Paragraph("pc-1", "doc-off", "Schedule 5", "Milk for cheese production is held at "
                  "the pasteurisation temperature for the required time.", group="C"),
    ]
    return StudySet(use_case_id="tiny", paragraphs=paragraphs, documents=small_docs)


@pytest.fixture
def small_gold(small_model) -> dict[str, LabelSet]:
    return {
        "pa-1": LabelSet(
            level1=RelevanceType.COMPLIANCE,
            level2={"s1": RelevanceType.COMPLIANCE},
            level3={"s1-t2": RelevanceType.COMPLIANCE},
        ),
        "pa-2": LabelSet(
            level1=RelevanceType.INFORMATIVE,
            level2={"s2": RelevanceType.INFORMATIVE},
            level3={"s2-t1": RelevanceType.INFORMATIVE},
        ),
        "pb-1": LabelSet(),
        "pc-1": LabelSet(),
    }
