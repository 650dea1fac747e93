import { Builder, By, WebDriver } from 'selenium-webdriver';

interface Address {
  street: string;
  zip: number;
}

const home: Address = { street: 'Main St', zip: 12345 };

describe('checkout', () => {
  let driver: WebDriver;

  beforeAll(async () => {
    driver = await new Builder().forBrowser('chrome').build();
  });

  it('fills the shipping form', async (): Promise<void> => {
    await driver.get('http://shop.local/checkout');
    await driver.findElement(By.id('street')).sendKeys(home.street);
    await driver.findElement(By.id('zip')).sendKeys(String(home.zip));
    const total = (await driver.findElement(By.id('total')).getText()) as string;
    await driver.findElement(By.id('confirm')).click();
    expect(total.startsWith('$')).toBe(true);
  });
});
