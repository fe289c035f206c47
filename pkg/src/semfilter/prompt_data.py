"""Embedded tables for prompt condensation: stop words, irregular lemmas,
a POS lexicon of common visual-question vocabulary, and the default
instruction-phrase blacklist. All tables are read-only."""

# Standard English stop-word list (clitic fragments included because the
# tokenizer splits on apostrophes).
STOP_WORDS = frozenset("""
i me my myself we our ours ourselves you your yours yourself yourselves he him
his himself she her hers herself it its itself they them their theirs
themselves what which who whom this that these those am is are was were be
been being have has had having do does did doing a an the and but if or
because as until while of at by for with about against between into through
during before after above below to from up down in out on off over under
again further then once here there when where why how all any both each few
more most other some such no nor not only own same so than too very s t can
will just don should now d ll m o re ve y ain aren couldn didn doesn hadn
hasn haven isn ma mightn mustn needn shan shouldn wasn weren won wouldn
""".split())

# Irregular forms the suffix rules cannot reach. "left" is deliberately
# absent: in visual questions it is almost always the spatial noun.
LEMMA_EXCEPTIONS = {
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "feet": "foot", "teeth": "tooth", "geese": "goose", "mice": "mouse",
    "oxen": "ox", "knives": "knife", "leaves": "leaf", "wives": "wife",
    "lives": "life", "loaves": "loaf", "shelves": "shelf", "wolves": "wolf",
    "scarves": "scarf", "calves": "calf", "halves": "half", "thieves": "thief",
    "movies": "movie", "cookies": "cookie",
    "ran": "run", "sat": "sit", "stood": "stand", "ate": "eat",
    "drank": "drink", "drove": "drive", "rode": "ride", "flew": "fly",
    "swam": "swim", "held": "hold", "wore": "wear", "worn": "wear",
    "threw": "throw", "thrown": "throw", "caught": "catch", "bought": "buy",
    "brought": "bring", "taught": "teach", "thought": "think", "went": "go",
    "gone": "go", "made": "make", "said": "say", "saw": "see", "seen": "see",
    "took": "take", "taken": "take", "gave": "give", "given": "give",
    "got": "get", "gotten": "get", "came": "come", "wrote": "write",
    "written": "write", "slept": "sleep", "spoke": "speak", "spoken": "speak",
    "broke": "break", "broken": "break", "chose": "choose", "chosen": "choose",
    "fell": "fall", "fallen": "fall", "felt": "feel", "found": "find",
    "heard": "hear", "kept": "keep", "knew": "know", "known": "know",
    "lost": "lose", "met": "meet", "paid": "pay", "rang": "ring",
    "rose": "rise", "sang": "sing", "sold": "sell", "sent": "send",
    "shot": "shoot", "showed": "show", "shown": "show", "spent": "spend",
    "swept": "sweep", "swung": "swing", "told": "tell",
    "understood": "understand", "woke": "wake", "better": "good",
    "best": "good", "worse": "bad", "worst": "bad",
}

_NOUNS = """
man woman child person boy girl baby adult kid crowd driver rider pilot
police officer doctor nurse teacher student chef waiter player team
dog cat bird horse cow sheep pig elephant bear zebra giraffe mouse fish duck
chicken rabbit lion tiger monkey snake frog insect butterfly bee spider
animal pet tail wing horn fur feather paw
car truck bus train airplane plane boat ship bicycle bike motorcycle vehicle
wheel tire engine road street sidewalk bridge crossing traffic stoplight
building house home door window wall roof floor ceiling room kitchen bathroom
bedroom stairs step elevator escalator platform balcony garage
table chair desk bench couch sofa bed lamp light clock mirror picture painting
photo image poster sign letter word text number book paper pen pencil
phone television tv computer laptop keyboard screen monitor camera device
machine tool remote speaker headphone battery charger
bottle cup glass mug plate bowl fork knife spoon napkin tray pot pan kettle
toaster oven stove microwave refrigerator fridge sink counter cabinet drawer
shelf towel pillow blanket curtain carpet rug vase basket bucket barrel jar
box container lid handle button switch key lock rope chain wire cable pipe
ladder fence gate
food fruit apple banana orange grape lemon strawberry watermelon pizza
sandwich burger hotdog cake bread cheese egg meat rice salad soup pasta
cookie pie donut candy chocolate coffee tea milk juice water wine beer
tree flower plant grass leaf branch bush forest mountain hill rock stone sand
beach ocean sea lake river pond sky cloud sun moon star rain snow fire smoke
field park garden yard farm path trail
umbrella bag backpack suitcase hat cap helmet shirt jacket coat dress pants
jeans shorts skirt shoe boot sock glove scarf tie watch ring necklace glasses
sunglasses belt pocket zipper
ball bat racket frisbee kite skateboard surfboard ski snowboard net goal
toy doll game sport court stadium track pool
color colour shape size side part piece corner edge top bottom left right
front back middle center background foreground object item thing area region
scene view group row line circle square triangle rectangle heart arrow stripe
dot pattern surface shadow reflection
face head eye ear nose mouth lip hair hand arm leg foot finger thumb neck
shoulder knee elbow beard mustache
time day night morning evening afternoon hour minute year month week season
summer winter spring weather
option answer question choice reason direction position location place spot
distance amount count total pair kind type sort brand logo flag sticker label
title name price
country city town village station airport hospital school store shop market
restaurant hotel office museum church tower castle statue fountain zoo
wood metal plastic leather cotton wool brick concrete fabric material
movie pie bus axe die lens
""".split()

_ADJS = """
red blue green yellow black white gray grey brown pink purple violet golden
silver beige maroon navy teal cyan magenta colorful
big large small little tiny huge giant tall short long wide narrow thick thin
high low round flat curved straight deep shallow
old young new modern ancient clean dirty wet dry hot cold warm cool bright
dim shiny dull clear cloudy sunny rainy snowy foggy
empty full open closed whole happy sad angry calm busy quiet loud fast slow
heavy soft hard smooth rough sharp blunt sweet sour bitter salty fresh rotten
ripe raw cooked frozen
near far close distant visible hidden striped spotted plaid checkered plain
fancy wooden metallic ceramic furry fluffy hairy bald male female
single double triple multiple several main similar different equal correct
wrong true false real fake possible likely common rare special normal strange
unusual pretty beautiful ugly cute nice good bad great perfect favorite
important famous popular expensive cheap free safe dangerous healthy sick
alive dead electric electronic digital manual automatic
upper lower inner outer nearest farthest leftmost rightmost topmost
first second third fourth fifth sixth seventh eighth ninth tenth
""".split()

_VERBS = """
run walk stand sit lie jump climb fly swim ride drive move stop go come enter
exit leave arrive stay wait look watch see observe stare glance read write
draw paint play work rest sleep wake eat drink cook bake cut slice chop pour
serve hold carry lift drop throw catch push pull wear buy sell pay give take
bring send receive show point touch hug smile laugh cry talk speak say tell
ask call shout whisper sing dance listen hear smell taste feel think know
understand remember forget learn teach count measure compare identify
describe explain contain include hang attach connect cover fill wash fix
repair build make create destroy break bend fold wrap turn spin roll slide
bounce float appear seem become happen occur exist surround lean kneel
crouch bow stretch reach grab wave shake nod land swing shoot win choose
fall find keep lose meet ring rise wwin loose spend sweep wake
""".split()

_OTHERS = """
yes please ok okay maybe perhaps also together outside inside nearby
everywhere somewhere anywhere today yesterday tomorrow always never often
sometimes usually currently directly many much none something anything
everything nothing someone anyone everyone nobody
zero one two three four five six seven eight nine ten eleven twelve
thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty
hundred thousand
""".split()

NOUN, ADJ, VERB, OTHER = "NOUN", "ADJ", "VERB", "OTHER"

LEXICON = {}
for _words, _tag in ((_NOUNS, NOUN), (_ADJS, ADJ), (_VERBS, VERB), (_OTHERS, OTHER)):
    for _w in _words:
        LEXICON.setdefault(_w, _tag)

# Best-effort default blacklist of VQA boilerplate; overridable by file.
DEFAULT_INSTRUCTION_PHRASES = (
    "Answer the question using a single word or phrase",
    "Please answer the question using a single word or phrase",
    "Answer the question with a single word or phrase",
    "Answer using a single word or phrase",
    "Answer with the option's letter from the given choices directly",
    "Please select the correct option",
    "Select the correct option",
    "Please answer yes or no",
    "Answer yes or no",
    "Answer the question directly",
    "Answer the question briefly",
    "Please provide a short answer",
    "Give a very brief answer",
    "Answer directly with a single word or number",
)
