from keras.layers import Input, Conv2D, Conv2DTranspose
from keras.models import Model

input_img = Input(shape=(28, 28, 1))
x = Conv2D(16, (3, 3), strides=2, padding="same", activation="relu")(input_img)
x = Conv2DTranspose(16, (3, 3), strides=2, padding="same", activation="relu")(x)
decoded = Conv2D(1, (3, 3), padding="same", activation="sigmoid")(x)
autoencoder = Model(input_img, decoded)
autoencoder.compile(optimizer="adadelta", loss="binary_crossentropy")
