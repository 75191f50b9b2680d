"""Prompt templates for every model-facing stage.

The four synthesis-stage templates are fixed prose; each rendering appends a
JSON-output instruction defining the key schema the parsers expect.
"""

FEATURE_EXTRACTION_PROMPT = """You are a visual description expert. Please provide a detailed, comprehensive, and natural language description of the following image, covering every visible detail.

Overall View:
- Summarize the scene in 1-2 sentences, focusing on the general setting, lighting, time of day, and the environment. Ensure to include the general mood and ambiance.

Main Objects:
- For each key object, describe these aspects in fluent natural language:
    - What is it (e.g., a person, a car, a building)?
    - Quantity, color, size, shape, material, texture, and any distinctive features.
    - Where is it located (foreground, center, background)?
    - State/Function: Is it active or stationary? What is its function in the scene?

Secondary Objects and Background:
- Describe smaller or less prominent objects and elements in the background. How do they relate to the main objects? Mention any supporting objects that add depth to the scene (e.g., objects on a table, items in the background, etc.).

Object Interactions:
- Highlight interactions or relationships between objects (e.g., people talking, animals interacting). Describe any dynamic actions or static arrangements.

Text:
- If there are text in the image, extract all the text and analyze its meanings.

Atmosphere&Theme:
- Convey the mood or theme of the scene, using descriptive adjectives (e.g., lively, serene, chaotic). If unsure, use "seems to" to indicate speculation about the tone.

Detailed Natural Language Description:
- Integrate all of the above details into a flowing, cohesive narrative. Ensure to describe every element in fine detail, maintaining clarity and logical structure. Avoid redundancy or skipping any visible detail."""

EXTRACTION_JSON_INSTRUCTION = """Return your description as a single JSON object with these keys:
{"overall_view": "...", "background": "...", "objects": [{"name": "...", "attributes": {"quantity": "...", "color": "...", "size": "...", "shape": "...", "material": "...", "texture": "...", "location": "...", "state": "..."}}], "interactions": "...", "text": "...", "atmosphere": "...", "narrative": "..."}
Use the "narrative" key for the detailed natural language description. Omit attribute keys you cannot determine."""

PAIR_CONNECTION_PROMPT = """You are a professional visual content analyst skilled in analyzing image pairs that exhibit clear correlations.

User will provide a set of structured descriptions corresponding to images. Based on these descriptions, you are required to analyze the images through an object-oriented or event-oriented approach to identify which image pairs are most strongly correlated. Specifically, you should focus on determining whether there are common objects or associated events/themes between the images. By evaluating the co-occurrence of objects or the relationships between events or topics, return the correlated image pairs as a tuple.

Criteria for relatedness:
- Object-oriented: the images share co-occurring objects.
- Event-oriented: the images depict shared or related events."""

CONNECTION_JSON_INSTRUCTION = """Return a single JSON list of index pairs, e.g. [[0, 2], [1, 3]]. Use the image numbers shown above. Return [] if no pair is correlated."""

RELEVANCE_ANNOTATION_PROMPT = """You are a professional visual content analyst skilled in analyzing relationships between image pairs, including temporal, spatial, and semantic connections.

User will provide you with two images. Please generate relationship annotations between them based on the following requirements:

Task Requirements:

1. Temporal Relationship:
   Identify if there is a clear sequence of events between Image A and Image B.
     - First, analyze whether the scenes or events in the two images represent a clear chronological order.
     - If there is a clear temporal sequence, describe the progression or transition between the two images, noting the overall process.

2. Spatial Relationship:
   Analyze if there are any spatial connections or changes in scene or object positions between Image A and Image B.
     - Check if both images depict the same scene or objects in similar layouts.
     - If shared objects or settings are present, compare their positions, orientations, or size differences in both images.

3. Semantic Relationship:
   Evaluate if there is a thematic, emotional, or causal connection between Image A and Image B.
     - Determine if the themes, emotional tones, or meaning presented in both images are consistent or related.
     - Assess if there is a cause-and-effect relationship or logical connection between the two images.

Output Format should be in JSON."""

ANNOTATION_JSON_INSTRUCTION = """Use exactly this JSON shape:
{"temporal": {"present": true/false, "description": "..."}, "spatial": {"present": true/false, "description": "..."}, "semantic": {"present": true/false, "description": "..."}}"""

QUESTION_GENERATION_PROMPT = """Task Requirements:
    1. Generate Three Complex Reasoning Questions:
       - Each question should be a multi-step reasoning question, and involve at least three images.
       - Questions should be object-oriented, or event-oriented.
       - Avoid begin with 'How' if possible, and make sure the answer is not open-ended.
       - Questions should be about fine-grained features instead of coarse understanding.
       - Questions types:
         - Detail analysis and comparison
         - Fact judgment
         - Sequence ordering
         - Scene understanding
         - Visual grounding
         - Counterfactual reasoning
         - Action prediction
         - Visual navigation
       - Don't specify images explicitly.
       - Each question must be a single sentence without clauses connected by 'and'.

    2. Decompose Each Complex Question into Sub-Questions and Build a Reasoning Chain:
       - Each sub-question specifies one or two images.
       - Don't focus on the same image twice.
       - Construct a logical reasoning chain for each question, showing the step-by-step connection of sub-questions and answers.

    3. Step-by-Step Answer Each Reasoning Chain to Arrive at the Final Answer

    4. Ensure Data Quality:
       - The questions and answers must be clear, specific, and logically consistent.
       - Avoid irrelevant details or ambiguity, ensuring that all generated content is directly related to the provided image information.

    Output Format should be JSON."""

GENERATION_JSON_INSTRUCTION = """Use exactly this JSON shape, referring to images by the index numbers shown above:
{"questions": [{"question": "...", "type": "open_ended" or "single_choice", "choices": ["..."], "steps": [{"sub_question": "...", "focus": [0], "answer": "..."}], "final_answer": "..."}]}
Include "choices" only for single_choice questions, and make the final_answer one of the choices."""

CHAIN_PLAN_PROMPT = """You are solving a question that spans several images. All images are attached, numbered starting at 0 in attachment order.

Main question: {question}

Sub-questions already asked:
{history}

Produce the next sub-question and the minimal set of image indices needed to answer it. Do not repeat an earlier sub-question.
Return JSON: {{"sub_question": "...", "focus": [indices]}}"""

CHAIN_ANSWER_PROMPT = """Answer the following sub-question using only the attached image(s).

Sub-question: {sub_question}

Reply with the answer text only."""

CHAIN_STOP_PROMPT = """You are solving this main question: {question}

Sub-questions answered so far:
{qa_pairs}

Decide whether these answers are sufficient to answer the main question.
Return JSON: {{"stop": true/false, "final_answer": "..."}} — include final_answer only when stop is true."""

CHAIN_STOP_FORCED_PROMPT = """You are solving this main question: {question}

Sub-questions answered so far:
{qa_pairs}

The reasoning budget is exhausted: you must stop now. Synthesize the best final answer from the answers above.
Return JSON: {{"stop": true, "final_answer": "..."}}"""
