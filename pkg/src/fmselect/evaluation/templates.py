"""Benchmark query grammar: 16 templates across four constraint families.

Each template captures one user scenario (data availability, compute
budget, application complexity, or evaluation priority) with slots filled
from a vocabulary under a seeded sampler, so a benchmark set is fully
reproducible from its seed. An optional paraphrase pass through the
generation provider is off by default.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from ..gateway import GenerationRequest


class TemplateCategory(str, Enum):
    DATA_AVAILABILITY = "data_availability"
    COMPUTATIONAL_RESOURCES = "computational_resources"
    APPLICATION_COMPLEXITY = "application_complexity"
    EVALUATION_PRIORITIES = "evaluation_priorities"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class QueryTemplate:
    template_id: str
    text: str
    category: TemplateCategory

    def slots(self) -> list:
        return re.findall(r"\{(\w+)\}", self.text)


QUERY_TEMPLATES = (
    QueryTemplate(
        "A1",
        "I’m looking for a model I can use out-of-the-box for {application} using "
        "{modality} data. I don’t have any labeled training data.",
        TemplateCategory.DATA_AVAILABILITY,
    ),
    QueryTemplate(
        "A2",
        "I have a well-labeled dataset for {application} with {modality} in {region}. "
        "Which model would be best to fully fine-tune from scratch?",
        TemplateCategory.DATA_AVAILABILITY,
    ),
    QueryTemplate(
        "A3",
        "I only have a few labeled samples for {application} using {sensor}. "
        "I want a model that can adapt well in a few-shot setting.",
        TemplateCategory.DATA_AVAILABILITY,
    ),
    QueryTemplate(
        "A4",
        "I have a lot of unlabeled {modality} imagery from {region}. I need a model "
        "that works well with self-supervised or unsupervised learning for {application}.",
        TemplateCategory.DATA_AVAILABILITY,
    ),
    QueryTemplate(
        "A5",
        "My data uses {sensor} with {spatial_resolution} resolution, but most models "
        "I’ve seen don’t support it. Can you recommend one that can be adapted?",
        TemplateCategory.DATA_AVAILABILITY,
    ),
    QueryTemplate(
        "B1",
        "I'm working on {application} but only have access to a laptop with no GPU. "
        "Which model would be small enough to run locally?",
        TemplateCategory.COMPUTATIONAL_RESOURCES,
    ),
    QueryTemplate(
        "B2",
        "I’m using a desktop with a single GPU and doing {application} on {modality} "
        "imagery. Which models balance performance and efficiency?",
        TemplateCategory.COMPUTATIONAL_RESOURCES,
    ),
    QueryTemplate(
        "B3",
        "For {application}, I have access to cloud GPUs and can afford large models. "
        "What’s the most powerful foundation model I can try?",
        TemplateCategory.COMPUTATIONAL_RESOURCES,
    ),
    QueryTemplate(
        "C1",
        "I'm doing basic {application} (e.g., 3–4 land classes). What lightweight "
        "model would you suggest for fast experimentation?",
        TemplateCategory.APPLICATION_COMPLEXITY,
    ),
    QueryTemplate(
        "C2",
        "I'm working on multi-class classification {application} with {modality} "
        "images. The task isn't trivial, but I don’t need pixel-level precision.",
        TemplateCategory.APPLICATION_COMPLEXITY,
    ),
    QueryTemplate(
        "C3",
        "I need a model for high-resolution segmentation or fine-grained "
        "{application}. Accuracy and spatial detail are important.",
        TemplateCategory.APPLICATION_COMPLEXITY,
    ),
    QueryTemplate(
        "D1",
        "For {application} using {sensor} data, I mainly care about achieving the "
        "highest overall accuracy, even if the model is large.",
        TemplateCategory.EVALUATION_PRIORITIES,
    ),
    QueryTemplate(
        "D2",
        "For {application} using {sensor} imagery, I want clean and accurate outputs "
        "with minimal false detections; clear boundaries and reliable predictions "
        "are most important.",
        TemplateCategory.EVALUATION_PRIORITIES,
    ),
    QueryTemplate(
        "D3",
        "For {application} using {sensor} imagery, I need to ensure all target "
        "instances are captured, even if some false alarms occur; completeness "
        "is critical.",
        TemplateCategory.EVALUATION_PRIORITIES,
    ),
    QueryTemplate(
        "D4",
        "I need fast inference for {application} in near real-time on {device}. "
        "What’s a good lightweight model?",
        TemplateCategory.EVALUATION_PRIORITIES,
    ),
    QueryTemplate(
        "Composite",
        "I'm doing {application} on {modality} in {region}, but I only have few-shot "
        "labels and limited compute. Which model fits this setup best?",
        TemplateCategory.COMPOSITE,
    ),
)

DEFAULT_VOCAB = {
    "application": [
        "flood mapping",
        "land cover classification",
        "crop type classification",
        "urban change detection",
        "tree species classification",
        "surface water segmentation",
        "scene classification",
        "semantic segmentation",
        "multi-label classification",
        "cloud mask segmentation",
    ],
    "modality": ["SAR", "multispectral", "hyperspectral", "RGB"],
    "sensor": ["Sentinel-1", "Sentinel-2", "Landsat-8", "EnMAP", "MODIS"],
    "region": [
        "Europe",
        "West Africa",
        "Southeast Asia",
        "the Amazon basin",
        "North America",
    ],
    "spatial_resolution": ["10m", "30m", "sub-meter", "0.5m"],
    "device": [
        "a mobile edge device",
        "a drone onboard computer",
        "a laptop CPU",
        "an embedded GPU",
    ],
}


@dataclass
class BenchmarkQuery:
    query_id: str
    text: str
    category: TemplateCategory
    template_id: str
    slots: dict

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "text": self.text,
            "category": self.category.value,
            "template_id": self.template_id,
            "slots": dict(self.slots),
        }


def instantiate_benchmark(templates=QUERY_TEMPLATES, vocab: Optional[dict] = None,
                          count_per_template: int = 1, seed: int = 0,
                          paraphrase: bool = False, provider=None) -> list:
    """Fill template slots under a seeded sampler.

    Query ids are stable for a fixed seed. Raises on a slot whose
    vocabulary is missing or empty.
    """
    if count_per_template < 1:
        raise ValueError("count_per_template must be >= 1")
    vocab = vocab or DEFAULT_VOCAB
    rng = random.Random(seed)
    queries = []
    for template in templates:
        for i in range(count_per_template):
            slots = {}
            for slot in template.slots():
                choices = vocab.get(slot)
                if not choices:
                    raise ValueError(f"slot {slot!r} has no vocabulary values")
                slots[slot] = rng.choice(choices)
            text = template.text
            for slot, value in slots.items():
                text = text.replace("{" + slot + "}", value)
            if paraphrase:
                if provider is None:
                    raise ValueError("paraphrasing requires a generation provider")
                result = provider.generate(GenerationRequest(
                    prompt=f"Paraphrase this request without changing its meaning:\n{text}",
                    max_output_tokens=256,
                ))
                if result.text.strip():
                    text = result.text.strip()
            queries.append(BenchmarkQuery(
                query_id=f"{template.template_id}-{i:02d}",
                text=text,
                category=template.category,
                template_id=template.template_id,
                slots=slots,
            ))
    return queries
